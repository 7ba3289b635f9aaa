use crate::commands::Failure;

/// Parses `start:stop:step` into `start, start + step, ...` up to `stop`
/// inclusive (within a small fraction of a step). Points are rounded to 12
/// decimals so that printed grids read cleanly.
pub fn parse_range(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::input(format!("range {text:?} is not start:stop:step")))?;
    let [start, stop, step] = nums[..] else {
        if let [single] = nums[..] {
            return Ok(vec![single]);
        }
        return Err(Failure::input(format!("range {text:?} is not start:stop:step")));
    };
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Failure::input(format!("range {text:?} needs step > 0 and start <= stop")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Failure::input(format!("range {text:?} has {count} points")));
    }
    Ok((0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Integer range `start:stop:step`.
pub fn parse_usize_range(text: &str) -> Result<Vec<usize>, Failure> {
    let v = parse_range(text)?;
    if v.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
        return Err(Failure::input(format!("range {text:?} must be non-negative integers")));
    }
    Ok(v.into_iter().map(|x| x as usize).collect())
}
