#![no_main]

use libfuzzer_sys::fuzz_target;
use surfmimo::analysis::McsTable;

fuzz_target!(|data: &str| {
    let _ = McsTable::parse(data);
});
