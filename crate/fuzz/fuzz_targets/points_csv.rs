#![no_main]

use libfuzzer_sys::fuzz_target;
use rbf_lab::geometry::PointSet;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(points) = PointSet::parse_csv(&text) {
        // whatever parses must survive a round trip
        let again = PointSet::parse_csv(&points.to_csv()).expect("written CSV parses");
        assert_eq!(again, points);
    }
});
