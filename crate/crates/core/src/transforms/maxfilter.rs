//! Square-window maximum filter (van Herk / Gil-Werman), O(1) comparisons
//! per pixel independent of the radius.

/// In-place 1-D running maximum over `[i - radius, i + radius]`, clipped to
/// the line. `scratch` is reused between calls.
fn running_max_1d(line: &mut [f64], radius: usize, scratch: &mut Scratch) {
    let n = line.len();
    if radius == 0 || n == 0 {
        return;
    }
    let window = 2 * radius + 1;
    let padded_len = n + 2 * radius;
    scratch.padded.clear();
    scratch.padded.resize(padded_len, f64::NEG_INFINITY);
    scratch.padded[radius..radius + n].copy_from_slice(line);
    let padded = &scratch.padded;

    // prefix maxima within each block of `window`, and suffix maxima
    scratch.prefix.clear();
    scratch.prefix.extend_from_slice(padded);
    scratch.suffix.clear();
    scratch.suffix.extend_from_slice(padded);
    let (prefix, suffix) = (&mut scratch.prefix, &mut scratch.suffix);
    for i in 1..padded_len {
        if i % window != 0 {
            prefix[i] = prefix[i].max(prefix[i - 1]);
        }
    }
    for i in (0..padded_len - 1).rev() {
        if (i + 1) % window != 0 {
            suffix[i] = suffix[i].max(suffix[i + 1]);
        }
    }
    for (i, out) in line.iter_mut().enumerate() {
        *out = suffix[i].max(prefix[i + 2 * radius]);
    }
}

#[derive(Default)]
struct Scratch {
    padded: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

/// Maximum over the Chebyshev ball of `radius` around every pixel.
/// Values outside the grid count as negative infinity.
pub(crate) fn chebyshev_max_filter(height: usize, width: usize, values: &[f64], radius: usize) -> Vec<f64> {
    debug_assert_eq!(values.len(), height * width);
    let mut out = values.to_vec();
    let mut scratch = Scratch::default();
    for row in out.chunks_mut(width) {
        running_max_1d(row, radius, &mut scratch);
    }
    let mut column = vec![0.0; height];
    for c in 0..width {
        for (r, v) in column.iter_mut().enumerate() {
            *v = out[r * width + c];
        }
        running_max_1d(&mut column, radius, &mut scratch);
        for (r, v) in column.iter().enumerate() {
            out[r * width + c] = *v;
        }
    }
    out
}
