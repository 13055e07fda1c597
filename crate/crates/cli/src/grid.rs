use crate::problem::parse_number;

/// Parses `start:stop:step` into `start, start + step, ..., stop`. The last
/// point is `stop` itself even when the step does not divide the range.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, h] = parts[..] else {
        return Err(format!("grid `{text}` is not of the form start:stop:step"));
    };
    let (a, b, h) = (parse_number(a)?, parse_number(b)?, parse_number(h)?);
    if h <= 0.0 {
        return Err(format!("grid step {h} must be positive"));
    }
    if b < a {
        return Err(format!("grid stop {b} is before start {a}"));
    }
    let n = ((b - a) / h - 1e-9).ceil().max(0.0) as usize;
    let mut points: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
    points.push(b);
    Ok(points)
}

/// Comma-separated numbers, e.g. `0,1/3,0.5`.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(parse_number).collect()
}
