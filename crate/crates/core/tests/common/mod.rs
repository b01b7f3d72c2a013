#![allow(dead_code)]

use blockpulse::detect::Direction;

/// (direction, onset, peak, end)
pub type OracleEvent = (Direction, usize, usize, usize);

/// Two-sided CUSUM with re-centring, recomputed from scratch at every sample.
///
/// Each sum is the largest suffix sum of `dir * (x - m) - k` since the last
/// reference change, clamped at zero. Arithmetic is exact: `m = num / den` and
/// everything is scaled by `2 * den`, so `k` must be a multiple of 1/2 and `h`
/// an integer.
pub fn cusum_oracle(x: &[i64], h: i64, k_halves: i64) -> Vec<OracleEvent> {
    let sides = [(Direction::Down, -1i128), (Direction::Up, 1i128)];
    let (mut num, mut den) = (0i128, 1i128);
    let mut epoch = 0usize;
    let mut run_start: [Option<usize>; 2] = [None; 2];
    let mut open: [Option<(usize, usize)>; 2] = [None; 2];
    let mut out = Vec::new();
    for i in 0..x.len() {
        let mut alarm = None;
        for (s, &(direction, sign)) in sides.iter().enumerate() {
            let term = |t: usize| sign * (2 * den * x[t] as i128 - 2 * num) - k_halves as i128 * den;
            let mut best = 0i128;
            let mut acc = 0i128;
            for t in (epoch..=i).rev() {
                acc += term(t);
                best = best.max(acc);
            }
            if best <= 0 {
                run_start[s] = None;
                if let Some((onset, peak)) = open[s].take() {
                    out.push((direction, onset, peak, i - 1));
                }
                continue;
            }
            run_start[s].get_or_insert(i);
            if best > 2 * den * h as i128 {
                alarm = Some(s);
            }
        }
        let Some(a) = alarm else { continue };
        let onset = run_start[a].unwrap();
        open[a].get_or_insert((onset, i));
        let from = onset.max(epoch);
        num = x[from..=i].iter().map(|&v| v as i128).sum();
        den = (i + 1 - from) as i128;
        let b = 1 - a;
        run_start[b] = None;
        if let Some((onset, peak)) = open[b].take() {
            out.push((sides[b].0, onset, peak, i - 1));
        }
        epoch = i + 1;
    }
    for (s, &(direction, _)) in sides.iter().enumerate() {
        if let Some((onset, peak)) = open[s] {
            out.push((direction, onset, peak, x.len() - 1));
        }
    }
    out.sort_by_key(|&(d, onset, peak, _)| (onset, d, peak));
    out
}
