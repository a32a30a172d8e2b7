//! Exhaustive small-blocklength verification of the converse inequality
//! H(Z^n|S^n) >= n · min H(Z|U): enumerate every deterministic relay encoder
//! Y1^n -> X1^n, compute H(Z^n|S^n) exactly from the product laws, and
//! compare the minimum against the single-letter bound.
//!
//! Deterministic block encoders suffice: a stochastic encoder is a mixture
//! of deterministic tables and conditioning on the mixture index only lowers
//! the conditional entropy, so the minimum over deterministic tables is the
//! minimum overall. That reduction is itself covered by a test below.

use crate::capacity::{capacity_grid_oracle, capacity_numeric, CapacityMethod, OptimizerOptions};
use crate::channel::{RelayChannelSpec, RelayLink};
use crate::error::{Error, Result};
use crate::info::{entropy_slice, Channel};

/// Enumeration guard: at most 2^24 deterministic encoders per sweep.
pub const ENCODER_ENUM_GUARD: u128 = 1 << 24;

/// A deterministic relay encoder: a total map from Y1^n to X1^n stored as an
/// index table of length |Y1|^n.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayEncoderTable {
    n: usize,
    map: Vec<usize>,
}

impl RelayEncoderTable {
    pub fn new(n: usize, map: Vec<usize>, y1_size: usize, x1_size: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("encoder: n must be >= 1".into()));
        }
        let y_count = (y1_size as u128).pow(n as u32);
        if map.len() as u128 != y_count {
            return Err(Error::Validation(format!(
                "encoder: table has {} entries, expected |Y1|^n = {y_count}",
                map.len()
            )));
        }
        let x_count = (x1_size as u128).pow(n as u32);
        if let Some(&bad) = map.iter().find(|&&v| (v as u128) >= x_count) {
            return Err(Error::Validation(format!(
                "encoder: entry {bad} is not a valid X1^n index (< {x_count})"
            )));
        }
        Ok(Self { n, map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }
}

/// Verification outcome for one spec and blocklength.
#[derive(Debug, Clone)]
pub struct ConverseReport {
    pub n: usize,
    pub encoder_count: u64,
    pub min_conditional_entropy: f64,
    /// n times the single-letter minimum of H(Z|U) at the link rate.
    pub bound: f64,
    pub worst_encoder: RelayEncoderTable,
    pub pass: bool,
    /// Retained only on request.
    pub per_encoder: Option<Vec<f64>>,
    /// Where the bound came from.
    pub bound_method: CapacityMethod,
    /// True when the optimizer could not certify convergence and the grid
    /// oracle's value was used instead (a stricter, conservative comparison).
    pub conservative_bound: bool,
}

fn link_channel(spec: &RelayChannelSpec) -> Result<&Channel> {
    match spec.relay_link() {
        RelayLink::Dmc(ch) => Ok(ch),
        RelayLink::ExplicitRate(_) => Err(Error::Precondition(
            "an explicit link channel is required (relay_link must be a dmc)".into(),
        )),
    }
}

fn checked_count(x1_size: usize, y1_size: usize, n: usize) -> Result<u64> {
    let xn = (x1_size as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Guard("encoder enumeration count overflows".into()))?;
    let yn = (y1_size as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Guard("encoder enumeration count overflows".into()))?;
    if yn > 64 {
        // x1 >= 2, so xn^yn would exceed the guard anyway; avoid pow overflow.
        return Err(Error::Guard(format!(
            "encoder enumeration: |X1^n|^(|Y1|^n) = {xn}^{yn} exceeds {ENCODER_ENUM_GUARD}"
        )));
    }
    let count = xn.checked_pow(yn as u32).ok_or_else(|| {
        Error::Guard(format!(
            "encoder enumeration: |X1^n|^(|Y1|^n) = {xn}^{yn} exceeds {ENCODER_ENUM_GUARD}"
        ))
    })?;
    if count > ENCODER_ENUM_GUARD {
        return Err(Error::Guard(format!(
            "encoder enumeration: |X1^n|^(|Y1|^n) = {count} exceeds {ENCODER_ENUM_GUARD}"
        )));
    }
    Ok(count as u64)
}

/// Lazily yields every deterministic relay encoder exactly once, in
/// lexicographic order of the table.
#[derive(Debug)]
pub struct EncoderIter {
    n: usize,
    y_count: usize,
    x_count: u64,
    next: u64,
    count: u64,
}

impl Iterator for EncoderIter {
    type Item = RelayEncoderTable;

    fn next(&mut self) -> Option<RelayEncoderTable> {
        if self.next >= self.count {
            return None;
        }
        let mut code = self.next;
        self.next += 1;
        let mut map = vec![0usize; self.y_count];
        for slot in map.iter_mut().rev() {
            *slot = (code % self.x_count) as usize;
            code /= self.x_count;
        }
        Some(RelayEncoderTable { n: self.n, map })
    }
}

/// Enumerate all deterministic relay encoders at blocklength `n`, refusing
/// when the count exceeds the 2^24 guard.
pub fn enumerate_encoders(n: usize, spec: &RelayChannelSpec) -> Result<EncoderIter> {
    if n == 0 {
        return Err(Error::Validation(
            "enumerate_encoders: n must be >= 1".into(),
        ));
    }
    let link = link_channel(spec)?;
    let x1_size = link.num_inputs();
    let y1_size = spec.y1_size();
    let count = checked_count(x1_size, y1_size, n)?;
    Ok(EncoderIter {
        n,
        y_count: (y1_size as u64).pow(n as u32) as usize,
        x_count: (x1_size as u64).pow(n as u32),
        next: 0,
        count,
    })
}

/// Product-law tables for one (spec, n) pair.
struct BlockTables {
    z_count: usize,
    y_count: usize,
    s_count: usize,
    /// p(z^n)
    pz: Vec<f64>,
    /// p(y1^n | z^n), indexed [z][y]
    obs: Vec<Vec<f64>>,
    /// p(s^n | x1^n), indexed [x][s]
    link: Vec<Vec<f64>>,
}

fn digits(mut index: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0usize; n];
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    out
}

impl BlockTables {
    fn build(spec: &RelayChannelSpec, n: usize) -> Result<Self> {
        let link = link_channel(spec)?;
        let m = spec.m();
        let y1 = spec.y1_size();
        let x1 = link.num_inputs();
        let s1 = link.num_outputs();
        let z_count = m.pow(n as u32);
        let y_count = y1.pow(n as u32);
        let x_count = x1.pow(n as u32);
        let s_count = s1.pow(n as u32);

        let noise = spec.noise().probs();
        let pz = (0..z_count)
            .map(|zi| digits(zi, m, n).iter().map(|&d| noise[d]).product())
            .collect();
        let obs = (0..z_count)
            .map(|zi| {
                let zd = digits(zi, m, n);
                (0..y_count)
                    .map(|yi| {
                        digits(yi, y1, n)
                            .iter()
                            .zip(&zd)
                            .map(|(&yd, &zd)| spec.relay_obs().row(zd)[yd])
                            .product()
                    })
                    .collect()
            })
            .collect();
        let link_table = (0..x_count)
            .map(|xi| {
                let xd = digits(xi, x1, n);
                (0..s_count)
                    .map(|si| {
                        digits(si, s1, n)
                            .iter()
                            .zip(&xd)
                            .map(|(&sd, &xd)| link.row(xd)[sd])
                            .product()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            z_count,
            y_count,
            s_count,
            pz,
            obs,
            link: link_table,
        })
    }

    /// Exact H(Z^n | S^n) for one encoder table.
    fn conditional_entropy(&self, map: &[usize]) -> f64 {
        let mut joint = vec![0.0f64; self.z_count * self.s_count];
        let mut p_s = vec![0.0f64; self.s_count];
        for z in 0..self.z_count {
            let base = z * self.s_count;
            for y in 0..self.y_count {
                let w = self.pz[z] * self.obs[z][y];
                if w == 0.0 {
                    continue;
                }
                let srow = &self.link[map[y]];
                for (s, &ls) in srow.iter().enumerate() {
                    joint[base + s] += w * ls;
                }
            }
        }
        for z in 0..self.z_count {
            for s in 0..self.s_count {
                p_s[s] += joint[z * self.s_count + s];
            }
        }
        entropy_slice(&joint) - entropy_slice(&p_s)
    }
}

/// Exact H(Z^n|S^n) for a given deterministic relay encoder, built from the
/// product of the single-letter laws.
pub fn conditional_entropy_exact(spec: &RelayChannelSpec, enc: &RelayEncoderTable) -> Result<f64> {
    let tables = BlockTables::build(spec, enc.n())?;
    if enc.map().len() != tables.y_count {
        return Err(Error::Dimension(format!(
            "encoder table has {} entries, spec expects {}",
            enc.map().len(),
            tables.y_count
        )));
    }
    Ok(tables.conditional_entropy(enc.map()))
}

/// Exhaustively verify the converse inequality at blocklength `n`: the
/// minimum of H(Z^n|S^n) over all deterministic relay encoders must be at
/// least n times the single-letter minimum of H(Z|U) at the link rate.
pub fn verify_converse_bound(
    spec: &RelayChannelSpec,
    n: usize,
    keep_per_encoder: bool,
) -> Result<ConverseReport> {
    let iter = enumerate_encoders(n, spec)?;
    let tables = BlockTables::build(spec, n)?;

    let opts = OptimizerOptions::default();
    let rep = capacity_numeric(spec, &opts)?;
    let (min_h_single, bound_method, conservative) = if rep.converged {
        (spec.log2_m() - rep.capacity, rep.method, false)
    } else {
        let grid = capacity_grid_oracle(spec, 128)?;
        (spec.log2_m() - grid.capacity, CapacityMethod::Grid, true)
    };
    let bound = n as f64 * min_h_single;

    let mut per_encoder = keep_per_encoder.then(Vec::new);
    let mut min_value = f64::INFINITY;
    let mut worst: Option<RelayEncoderTable> = None;
    let mut encoder_count = 0u64;
    for enc in iter {
        let h = tables.conditional_entropy(enc.map());
        if let Some(v) = per_encoder.as_mut() {
            v.push(h);
        }
        if h < min_value {
            min_value = h;
            worst = Some(enc);
        }
        encoder_count += 1;
    }
    let worst_encoder = worst.expect("the enumeration is never empty");
    Ok(ConverseReport {
        n,
        encoder_count,
        min_conditional_entropy: min_value,
        bound,
        worst_encoder,
        pass: min_value >= bound - 1e-9,
        per_encoder,
        bound_method,
        conservative_bound: conservative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bsc_relay;
    use crate::info::entropy;
    use crate::rng::SplitMix64;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Independent n = 1 oracle: direct summation over the (z, y1, s) cube.
    fn h_zs_single_letter(p: f64, delta: f64, eps: f64, enc: &[usize]) -> f64 {
        let pz = [1.0 - p, p];
        let obs = [[1.0 - delta, delta], [delta, 1.0 - delta]];
        let link = [[1.0 - eps, eps], [eps, 1.0 - eps]];
        let mut joint = [[0.0f64; 2]; 2];
        for z in 0..2 {
            for y in 0..2 {
                for s in 0..2 {
                    joint[z][s] += pz[z] * obs[z][y] * link[enc[y]][s];
                }
            }
        }
        let flat = [joint[0][0], joint[0][1], joint[1][0], joint[1][1]];
        let ps = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
        entropy_slice(&flat) - entropy_slice(&ps)
    }

    #[test]
    fn encoder_counts_match_the_arithmetic() {
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        assert_eq!(enumerate_encoders(1, &spec).unwrap().count(), 4);
        assert_eq!(enumerate_encoders(2, &spec).unwrap().count(), 256);
        // n = 3 sits exactly on the 2^24 boundary and is allowed.
        let it = enumerate_encoders(3, &spec).unwrap();
        assert_eq!(it.count, 1 << 24);
        // One step beyond is refused, naming the count.
        match enumerate_encoders(4, &spec) {
            Err(Error::Guard(msg)) => assert!(msg.contains("exceeds"), "{msg}"),
            other => panic!("expected guard refusal, got {other:?}"),
        }
    }

    #[test]
    fn encoders_are_lexicographic_and_unique() {
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        let tables: Vec<Vec<usize>> = enumerate_encoders(1, &spec)
            .unwrap()
            .map(|e| e.map().to_vec())
            .collect();
        assert_eq!(tables, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let mut seen: Vec<Vec<usize>> = enumerate_encoders(2, &spec)
            .unwrap()
            .map(|e| e.map().to_vec())
            .collect();
        let total = seen.len();
        seen.dedup();
        assert_eq!(seen.len(), total);
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted, "enumeration must already be lexicographic");
    }

    #[test]
    fn explicit_rate_links_are_refused() {
        let spec = crate::channel::bsc_relay_with_rate(0.5, 0.1, 0.5).unwrap();
        assert!(matches!(
            enumerate_encoders(2, &spec),
            Err(Error::Precondition(_))
        ));
        let enc = RelayEncoderTable::new(1, vec![0, 1], 2, 2).unwrap();
        assert!(matches!(
            conditional_entropy_exact(&spec, &enc),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn constant_encoder_gives_n_times_noise_entropy() {
        let spec = bsc_relay(0.3, 0.1, 0.11).unwrap();
        let hz = entropy(spec.noise());
        for n in 1..=3 {
            let y_count = 2usize.pow(n as u32);
            let enc = RelayEncoderTable::new(n, vec![0; y_count], 2, 2).unwrap();
            let h = conditional_entropy_exact(&spec, &enc).unwrap();
            assert!(close(h, n as f64 * hz, 1e-12), "n={n}: {h}");
        }
    }

    #[test]
    fn noiseless_identity_reveals_z_exactly() {
        let spec = bsc_relay(0.5, 0.0, 0.0).unwrap();
        let enc = RelayEncoderTable::new(1, vec![0, 1], 2, 2).unwrap();
        assert!(close(
            conditional_entropy_exact(&spec, &enc).unwrap(),
            0.0,
            1e-12
        ));
    }

    #[test]
    fn single_letter_identity_matches_direct_summation() {
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        let enc = RelayEncoderTable::new(1, vec![0, 1], 2, 2).unwrap();
        let h = conditional_entropy_exact(&spec, &enc).unwrap();
        let oracle = h_zs_single_letter(0.5, 0.1, 0.11, &[0, 1]);
        assert!(close(h, oracle, 1e-12));
        // Z -> S is a BSC(0.1 * 0.11) = BSC(0.188) cascade here, so the
        // value is h(0.188); frozen from 50-digit arithmetic.
        assert!(close(h, 0.69726881579232812, 1e-12));
        assert!(h > 0.0 && h < 1.0);
    }

    #[test]
    fn stochastic_encoders_cannot_beat_the_deterministic_minimum() {
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        let encoders: Vec<Vec<usize>> = enumerate_encoders(1, &spec)
            .unwrap()
            .map(|e| e.map().to_vec())
            .collect();
        let values: Vec<f64> = encoders
            .iter()
            .map(|m| h_zs_single_letter(0.5, 0.1, 0.11, m))
            .collect();
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let w = rng.simplex(3);
            let picks: Vec<usize> = (0..3).map(|_| rng.next_below(4) as usize).collect();
            // Mixture of three deterministic tables: p(s|y1) is the weighted
            // average of the component links.
            let pz = [0.5, 0.5];
            let obs = [[0.9, 0.1], [0.1, 0.9]];
            let link = [[0.89, 0.11], [0.11, 0.89]];
            let mut joint = [[0.0f64; 2]; 2];
            for z in 0..2 {
                for y in 0..2 {
                    for s in 0..2 {
                        let mut ls = 0.0;
                        for (k, &pick) in picks.iter().enumerate() {
                            ls += w[k] * link[encoders[pick][y]][s];
                        }
                        joint[z][s] += pz[z] * obs[z][y] * ls;
                    }
                }
            }
            let flat = [joint[0][0], joint[0][1], joint[1][0], joint[1][1]];
            let ps = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
            let h_mix = entropy_slice(&flat) - entropy_slice(&ps);
            let h_min = picks
                .iter()
                .map(|&k| values[k])
                .fold(f64::INFINITY, f64::min);
            assert!(h_mix >= h_min - 1e-12);
        }
    }

    #[test]
    fn bsc_links_are_invariant_under_x1_relabeling() {
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        for enc in enumerate_encoders(1, &spec).unwrap() {
            let swapped: Vec<usize> = enc.map().iter().map(|&v| 1 - v).collect();
            let swapped = RelayEncoderTable::new(1, swapped, 2, 2).unwrap();
            let a = conditional_entropy_exact(&spec, &enc).unwrap();
            let b = conditional_entropy_exact(&spec, &swapped).unwrap();
            assert!(close(a, b, 1e-12));
        }
    }

    #[test]
    fn converse_holds_with_equality_in_degenerate_regimes() {
        // delta = 0.5: the relay sees pure noise, every encoder gives
        // exactly 2 H(Z) and the bound matches.
        let spec = bsc_relay(0.3, 0.5, 0.11).unwrap();
        let rep = verify_converse_bound(&spec, 2, false).unwrap();
        assert!(rep.pass);
        let hz2 = 2.0 * entropy(spec.noise());
        assert!(close(rep.min_conditional_entropy, hz2, 1e-10));
        assert!(close(rep.bound, hz2, 1e-9));

        // eps = 0.5: useless link, R0 = 0.
        let spec = bsc_relay(0.3, 0.1, 0.5).unwrap();
        let rep = verify_converse_bound(&spec, 2, false).unwrap();
        assert!(rep.pass);
        assert!(close(rep.min_conditional_entropy, hz2, 1e-10));
        assert!(close(rep.bound, hz2, 1e-9));
    }

    #[test]
    fn ternary_alphabets_verify_at_blocklength_one() {
        // m = 3 with a ternary symmetric link: 27 deterministic encoders.
        let noise = crate::info::Pmf::new(vec![0.5, 0.3, 0.2]).unwrap();
        let obs = Channel::new(vec![
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
        ])
        .unwrap();
        let link = Channel::new(vec![
            vec![0.9, 0.05, 0.05],
            vec![0.05, 0.9, 0.05],
            vec![0.05, 0.05, 0.9],
        ])
        .unwrap();
        let spec = crate::channel::RelayChannelSpec::new(
            3,
            noise,
            obs,
            crate::channel::RelayLink::Dmc(link),
        )
        .unwrap();
        assert_eq!(enumerate_encoders(1, &spec).unwrap().count(), 27);
        let rep = verify_converse_bound(&spec, 1, true).unwrap();
        assert!(
            rep.pass,
            "min {} vs bound {}",
            rep.min_conditional_entropy, rep.bound
        );
        assert_eq!(rep.encoder_count, 27);
        assert_eq!(rep.per_encoder.as_ref().unwrap().len(), 27);
        // Blocklength 2 would need 9^9 encoders: refused.
        assert!(matches!(enumerate_encoders(2, &spec), Err(Error::Guard(_))));
    }

    #[test]
    fn sweep_retains_per_encoder_values_on_request() {
        let spec = bsc_relay(0.5, 0.25, 0.2).unwrap();
        let rep = verify_converse_bound(&spec, 1, true).unwrap();
        let values = rep.per_encoder.as_ref().unwrap();
        assert_eq!(values.len(), 4);
        assert!(rep.pass);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(close(min, rep.min_conditional_entropy, 0.0));
    }
}
