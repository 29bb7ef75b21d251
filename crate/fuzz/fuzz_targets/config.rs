#![no_main]

use libfuzzer_sys::fuzz_target;
use surfmimo::io::parse_config;

fuzz_target!(|data: &str| {
    let _ = parse_config(data);
});
