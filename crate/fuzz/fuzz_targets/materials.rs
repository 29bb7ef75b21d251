#![no_main]

use libfuzzer_sys::fuzz_target;
use surfmimo::propagation::MaterialLibrary;

fuzz_target!(|data: &str| {
    let _ = MaterialLibrary::parse(data);
});
