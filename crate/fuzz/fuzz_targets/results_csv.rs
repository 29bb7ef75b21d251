#![no_main]

use libfuzzer_sys::fuzz_target;
use surfmimo::io::rows::SweepRow;
use surfmimo::io::ResultSet;

// Sweep rows mix string, float and integer columns.
fuzz_target!(|data: &[u8]| {
    let _ = ResultSet::<SweepRow>::parse(data);
});
