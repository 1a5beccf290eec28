#![no_main]

use libfuzzer_sys::fuzz_target;
use rbf_lab::functions::Expression;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(expr) = Expression::parse(&text) {
        let _ = expr.eval(&[0.25, -1.0, 3.0]);
        let _ = expr.eval(&[f64::MAX]);
    }
});
