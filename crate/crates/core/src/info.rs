//! Finite-alphabet probability objects and the entropy functionals built on
//! them. All entropies are in bits (log base 2) and 0·log 0 is taken as 0.

use crate::error::{Error, Result};

/// Absolute tolerance on normalization checks.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Probabilities below this are treated as exact zeros so logs never
/// underflow into NaNs.
const ZERO_FLOOR: f64 = 1e-300;

/// p · log2(p) with the 0·log 0 := 0 convention.
#[inline]
pub(crate) fn xlog2(p: f64) -> f64 {
    if p < ZERO_FLOOR {
        0.0
    } else {
        p * p.log2()
    }
}

/// Shannon entropy of a normalized slice, in bits.
#[inline]
pub(crate) fn entropy_slice(probs: &[f64]) -> f64 {
    -probs.iter().copied().map(xlog2).sum::<f64>()
}

fn check_weights(what: &str, w: &[f64]) -> Result<()> {
    for (i, &x) in w.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Validation(format!(
                "{what}: entry {i} is {x}, must be finite and >= 0"
            )));
        }
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Validation(format!(
            "{what}: entries sum to {sum}, expected 1 within {NORMALIZATION_TOL:e}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Pmf
// ---------------------------------------------------------------------------

/// Probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("pmf: alphabet size must be >= 1".into()));
        }
        check_weights("pmf", &probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Validation("pmf: alphabet size must be >= 1".into()));
        }
        Ok(Self {
            probs: vec![1.0 / len as f64; len],
        })
    }

    pub fn point_mass(len: usize, at: usize) -> Result<Self> {
        if len == 0 || at >= len {
            return Err(Error::Validation(format!(
                "pmf: point mass at {at} needs alphabet size > {at}"
            )));
        }
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    /// Two-point law [1-p, p].
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "bernoulli parameter {p} not in [0,1]"
            )));
        }
        Ok(Self {
            probs: vec![1.0 - p, p],
        })
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!(check_weights("pmf", &probs).is_ok());
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

/// Row-stochastic conditional distribution; rows index inputs, columns
/// outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Validation(
                "channel: needs at least one row and one column".into(),
            ));
        }
        let cols = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "channel: row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            check_weights(&format!("channel row {i}"), row)?;
        }
        Ok(Self { rows })
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn bsc(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::Domain(format!(
                "bsc crossover {crossover} not in [0,1]"
            )));
        }
        Ok(Self {
            rows: vec![
                vec![1.0 - crossover, crossover],
                vec![crossover, 1.0 - crossover],
            ],
        })
    }

    pub fn identity(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Validation("channel: size must be >= 1".into()));
        }
        let rows = (0..size)
            .map(|i| {
                let mut r = vec![0.0; size];
                r[i] = 1.0;
                r
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn num_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Cascade: this channel followed by `next` (matrix product).
    pub fn compose(&self, next: &Channel) -> Result<Channel> {
        if self.num_outputs() != next.num_inputs() {
            return Err(Error::Dimension(format!(
                "compose: {} outputs vs {} inputs",
                self.num_outputs(),
                next.num_inputs()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..next.num_outputs())
                    .map(|y| r.iter().zip(&next.rows).map(|(&w, nr)| w * nr[y]).sum())
                    .collect()
            })
            .collect();
        Ok(Channel { rows })
    }

    /// Output distribution induced by `input`.
    pub fn output_marginal(&self, input: &Pmf) -> Result<Pmf> {
        if input.len() != self.num_inputs() {
            return Err(Error::Dimension(format!(
                "output_marginal: input length {} vs {} channel rows",
                input.len(),
                self.num_inputs()
            )));
        }
        let mut out = vec![0.0; self.num_outputs()];
        for (p, row) in input.probs().iter().zip(&self.rows) {
            for (o, &w) in out.iter_mut().zip(row) {
                *o += p * w;
            }
        }
        Ok(Pmf::from_normalized(out))
    }
}

// ---------------------------------------------------------------------------
// Joint
// ---------------------------------------------------------------------------

/// Joint distribution over a product alphabet, with axis labels for error
/// messages and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    table: Vec<Vec<f64>>,
    labels: (String, String),
}

/// Selects the conditioning variable of a [`Joint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Col,
}

impl Joint {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        Self::labeled(table, "a", "b")
    }

    pub fn labeled(table: Vec<Vec<f64>>, row_label: &str, col_label: &str) -> Result<Self> {
        if table.is_empty() || table[0].is_empty() {
            return Err(Error::Validation(
                "joint: needs at least one row and one column".into(),
            ));
        }
        let cols = table[0].len();
        let mut sum = 0.0;
        for (i, row) in table.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "joint: row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::Validation(format!(
                        "joint: entry ({i},{j}) is {x}, must be finite and >= 0"
                    )));
                }
                sum += x;
            }
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "joint: entries sum to {sum}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(Self {
            table,
            labels: (row_label.to_string(), col_label.to_string()),
        })
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn labels(&self) -> (&str, &str) {
        (&self.labels.0, &self.labels.1)
    }

    pub fn num_rows(&self) -> usize {
        self.table.len()
    }

    pub fn num_cols(&self) -> usize {
        self.table[0].len()
    }

    /// Marginal of the row variable.
    pub fn row_marginal(&self) -> Pmf {
        Pmf::from_normalized(self.table.iter().map(|r| r.iter().sum()).collect())
    }

    /// Marginal of the column variable.
    pub fn col_marginal(&self) -> Pmf {
        let mut out = vec![0.0; self.num_cols()];
        for row in &self.table {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        Pmf::from_normalized(out)
    }

    /// Joint entropy H(A,B) in bits.
    pub fn entropy(&self) -> f64 {
        -self
            .table
            .iter()
            .flat_map(|r| r.iter().copied())
            .map(xlog2)
            .sum::<f64>()
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Shannon entropy of a pmf, in bits.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_slice(p.probs())
}

/// Binary entropy function h(q) in bits.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("binary_entropy: {q} not in [0,1]")));
    }
    Ok(-xlog2(q) - xlog2(1.0 - q))
}

/// Lower-branch inverse of the binary entropy function: the unique
/// x in [0, 1/2] with h(x) = y, by bisection (h' is unbounded at 0, so
/// bisection rather than Newton).
pub fn binary_entropy_inv(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!(
            "binary_entropy_inv: {y} not in [0,1]"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Binary convolution a∗b = a(1−b) + (1−a)b, the crossover of two cascaded
/// binary symmetric channels.
pub fn binary_convolve(a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!(
            "binary_convolve: ({a}, {b}) not in [0,1]^2"
        )));
    }
    Ok(a * (1.0 - b) + (1.0 - a) * b)
}

/// Joint distribution of (input, output): `table[i][j] = input[i]·ch[i][j]`.
pub fn joint_from(input: &Pmf, ch: &Channel) -> Result<Joint> {
    if input.len() != ch.num_inputs() {
        return Err(Error::Dimension(format!(
            "joint_from: input length {} vs {} channel rows",
            input.len(),
            ch.num_inputs()
        )));
    }
    let table = input
        .probs()
        .iter()
        .zip(ch.rows())
        .map(|(&p, row)| row.iter().map(|&w| p * w).collect())
        .collect();
    Joint::labeled(table, "in", "out")
}

/// Mutual information I(input; output) = H(output) − Σᵢ inputᵢ·H(rowᵢ), in
/// bits. Clamped at zero against rounding dust.
pub fn mutual_information(input: &Pmf, ch: &Channel) -> Result<f64> {
    let out = ch.output_marginal(input)?;
    let cond: f64 = input
        .probs()
        .iter()
        .zip(ch.rows())
        .map(|(&p, row)| p * entropy_slice(row))
        .sum();
    Ok((entropy_slice(out.probs()) - cond).max(0.0))
}

/// Conditional entropy H(A|B) = H(A,B) − H(B), where `given` selects the
/// conditioning variable.
pub fn conditional_entropy(j: &Joint, given: Axis) -> f64 {
    let hb = match given {
        Axis::Row => entropy_slice(j.row_marginal().probs()),
        Axis::Col => entropy_slice(j.col_marginal().probs()),
    };
    j.entropy() - hb
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Frozen reference values, computed independently with 50-digit
    // arithmetic before this module was written.
    const H_BER_01: f64 = 0.46899559358928122;
    const H_BER_011: f64 = 0.49991595816452800;
    const HINV_HALF: f64 = 0.11002786443835955;

    #[test]
    fn entropy_uniform_and_point_mass() {
        assert_eq!(entropy(&Pmf::uniform(2).unwrap()), 1.0);
        assert_eq!(entropy(&Pmf::point_mass(4, 2).unwrap()), 0.0);
    }

    #[test]
    fn entropy_bernoulli_matches_reference() {
        let p = Pmf::bernoulli(0.1).unwrap();
        assert!(close(entropy(&p), H_BER_01, 1e-12));
    }

    #[test]
    fn pmf_rejects_bad_inputs() {
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![0.5, 0.4]).is_err());
        assert!(Pmf::new(vec![1.2, -0.2]).is_err());
        assert!(Pmf::bernoulli(1.5).is_err());
    }

    #[test]
    fn binary_entropy_corners_and_reference() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert!(close(binary_entropy(0.11).unwrap(), H_BER_011, 1e-12));
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn binary_entropy_inv_corners_and_reference() {
        assert_eq!(binary_entropy_inv(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy_inv(1.0).unwrap(), 0.5);
        assert!(close(binary_entropy_inv(0.5).unwrap(), HINV_HALF, 1e-12));
        assert!(binary_entropy_inv(-0.01).is_err());
    }

    #[test]
    fn binary_convolve_identities() {
        assert_eq!(binary_convolve(0.3, 0.0).unwrap(), 0.3);
        assert_eq!(binary_convolve(0.3, 0.5).unwrap(), 0.5);
        assert!(close(
            binary_convolve(0.110028, 0.1).unwrap(),
            0.1880224,
            1e-15
        ));
        assert!(binary_convolve(2.0, 0.1).is_err());
    }

    #[test]
    fn joint_from_examples() {
        let j = joint_from(&Pmf::uniform(2).unwrap(), &Channel::identity(2).unwrap()).unwrap();
        assert_eq!(j.table(), &[vec![0.5, 0.0], vec![0.0, 0.5]]);

        let j = joint_from(&Pmf::point_mass(2, 1).unwrap(), &Channel::bsc(0.2).unwrap()).unwrap();
        assert_eq!(j.table()[0], vec![0.0, 0.0]);
        assert!(close(j.table()[1][0], 0.2, 1e-15));

        let j = joint_from(&Pmf::bernoulli(0.1).unwrap(), &Channel::bsc(0.2).unwrap()).unwrap();
        let want = [[0.9 * 0.8, 0.9 * 0.2], [0.1 * 0.2, 0.1 * 0.8]];
        for i in 0..2 {
            for k in 0..2 {
                assert!(close(j.table()[i][k], want[i][k], 1e-15));
            }
        }
        assert!(joint_from(&Pmf::uniform(3).unwrap(), &Channel::bsc(0.2).unwrap()).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let u = Pmf::uniform(2).unwrap();
        assert!(close(
            mutual_information(&u, &Channel::bsc(0.5).unwrap()).unwrap(),
            0.0,
            1e-15
        ));
        assert!(close(
            mutual_information(&u, &Channel::identity(2).unwrap()).unwrap(),
            1.0,
            1e-15
        ));
        assert!(close(
            mutual_information(&u, &Channel::bsc(0.1).unwrap()).unwrap(),
            1.0 - H_BER_01,
            1e-12
        ));
    }

    #[test]
    fn conditional_entropy_examples() {
        // Independent pair: H(A|B) = H(A).
        let j = Joint::new(vec![vec![0.06, 0.14], vec![0.24, 0.56]]).unwrap();
        assert!(close(
            conditional_entropy(&j, Axis::Col),
            binary_entropy(0.2).unwrap(),
            1e-12
        ));
        // Deterministic A = B.
        let j = Joint::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!(close(conditional_entropy(&j, Axis::Col), 0.0, 1e-15));
        // Z ~ Ber(1/2), Y1 = Z xor Ber(0.1): H(Z|Y1) = h(0.1).
        let j = joint_from(&Pmf::uniform(2).unwrap(), &Channel::bsc(0.1).unwrap()).unwrap();
        assert!(close(conditional_entropy(&j, Axis::Col), H_BER_01, 1e-12));
    }

    #[test]
    fn joint_marginals_recover_inputs() {
        let input = Pmf::bernoulli(0.3).unwrap();
        let ch = Channel::new(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
        let j = joint_from(&input, &ch).unwrap();
        for (a, b) in j.row_marginal().probs().iter().zip(input.probs()) {
            assert!(close(*a, *b, 1e-15));
        }
        let out = ch.output_marginal(&input).unwrap();
        for (a, b) in j.col_marginal().probs().iter().zip(out.probs()) {
            assert!(close(*a, *b, 1e-15));
        }
    }

    #[test]
    fn convolve_is_monotone_toward_half_on_grid() {
        for i in 0..=20 {
            for k in 0..=20 {
                let a = i as f64 / 20.0;
                let b = k as f64 / 20.0;
                let c = binary_convolve(a, b).unwrap();
                let d = (c - 0.5).abs();
                assert!(d <= (a - 0.5).abs() + 1e-15);
                assert!(d <= (b - 0.5).abs() + 1e-15);
            }
        }
    }

    fn arb_pmf(len: usize) -> impl Strategy<Value = Pmf> {
        prop::collection::vec(0.01f64..1.0, len).prop_map(|v| {
            let s: f64 = v.iter().sum();
            Pmf::from_normalized(v.into_iter().map(|x| x / s).collect())
        })
    }

    fn arb_channel(rows: usize, cols: usize) -> impl Strategy<Value = Channel> {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, cols), rows).prop_map(|m| {
            Channel::new(
                m.into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum();
                        r.into_iter().map(|x| x / s).collect()
                    })
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn chain_rule_holds(input in arb_pmf(3), ch in arb_channel(3, 4)) {
            let j = joint_from(&input, &ch).unwrap();
            let h_joint = j.entropy();
            let h_b = entropy(&j.col_marginal());
            let h_a_given_b = conditional_entropy(&j, Axis::Col);
            prop_assert!((h_joint - (h_b + h_a_given_b)).abs() < 1e-10);
        }

        #[test]
        fn data_processing_inequality(input in arb_pmf(3), c1 in arb_channel(3, 3), c2 in arb_channel(3, 3)) {
            let cascade = c1.compose(&c2).unwrap();
            let i_far = mutual_information(&input, &cascade).unwrap();
            let i_near = mutual_information(&input, &c1).unwrap();
            prop_assert!(i_far <= i_near + 1e-10);
        }

        #[test]
        fn binary_entropy_inv_is_right_inverse(y in 0.0f64..=1.0) {
            let x = binary_entropy_inv(y).unwrap();
            prop_assert!((0.0..=0.5).contains(&x));
            prop_assert!((binary_entropy(x).unwrap() - y).abs() < 1e-10);
        }

        #[test]
        fn binary_entropy_is_symmetric(q in 0.0f64..=1.0) {
            prop_assert!((binary_entropy(q).unwrap() - binary_entropy(1.0 - q).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn convolve_commutes_and_associates(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let ab = binary_convolve(a, b).unwrap();
            let ba = binary_convolve(b, a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            let ab_c = binary_convolve(ab, c).unwrap();
            let a_bc = binary_convolve(a, binary_convolve(b, c).unwrap()).unwrap();
            prop_assert!((ab_c - a_bc).abs() < 1e-12);
        }

        #[test]
        fn mutual_information_bounds(input in arb_pmf(3), ch in arb_channel(3, 4)) {
            let i = mutual_information(&input, &ch).unwrap();
            prop_assert!(i >= -1e-12);
            prop_assert!(i <= (3f64).log2() + 1e-12);
            prop_assert!(i <= (4f64).log2() + 1e-12);
        }
    }
}
