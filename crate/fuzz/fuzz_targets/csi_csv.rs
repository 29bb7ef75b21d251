#![no_main]

use libfuzzer_sys::fuzz_target;
use surfmimo::io::parse_csi;

fuzz_target!(|data: &[u8]| {
    let _ = parse_csi(data);
});
