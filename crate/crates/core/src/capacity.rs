//! Capacity of the modulo-sum relay channel: log2(m) − min H(Z|U) over
//! quantizers p(u|y1) with I(U;Y1) bounded by the relay link rate.
//!
//! The minimization is an information-bottleneck-type problem solved by
//! Lagrangian alternating minimization: for a multiplier beta the quantizer
//! rows are driven to the stationary point of H(Z|U) + beta·I(U;Y1), the
//! multiplier is swept over a log grid and refined by bisection on the rate
//! constraint, and the best feasible point is taken. Where the trade-off
//! curve is flat the constrained optimum is reached by time-sharing two
//! bracketing solutions inside the |U| = |Y1|+2 alphabet budget.
//!
//! Closed forms for the binary uniform-noise instance (capacity, cut-set
//! bound, the binary conditional entropy-power lower bound) and an
//! exhaustive grid oracle for small alphabets live here as well.

use crate::channel::{relay_link_capacity, RelayChannelSpec};
use crate::error::{Error, Result};
use crate::info::{
    binary_convolve, binary_entropy, binary_entropy_inv, entropy, entropy_slice, xlog2, Channel,
};
use crate::rng::SplitMix64;

/// Feasibility slack on the rate constraint: a quantizer with
/// I(U;Y1) <= R0 + RATE_SLACK is accepted.
pub const RATE_SLACK: f64 = 1e-9;

const DOMAIN_OPTIMIZER: u64 = 1;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A quantizer p(u|y1) together with its operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerDesign {
    q: Channel,
    rate: f64,
    distortion: f64,
}

impl QuantizerDesign {
    /// Validate the test channel against the spec and compute its rate
    /// I(U;Y1) and distortion H(Z|U) through the chain Z - Y1 - U.
    pub fn new(q: Channel, spec: &RelayChannelSpec) -> Result<Self> {
        let y1 = spec.y1_size();
        if q.num_inputs() != y1 {
            return Err(Error::Dimension(format!(
                "quantizer has {} rows, expected |Y1| = {y1}",
                q.num_inputs()
            )));
        }
        if q.num_outputs() > y1 + 2 {
            return Err(Error::Validation(format!(
                "quantizer has {} columns, cardinality bound allows |Y1|+2 = {}",
                q.num_outputs(),
                y1 + 2
            )));
        }
        let prob = BottleneckProblem::from_spec(spec);
        let (rate, distortion) = prob.evaluate(q.rows());
        Ok(Self {
            q,
            rate,
            distortion,
        })
    }

    pub fn q(&self) -> &Channel {
        &self.q
    }

    /// I(U;Y1) in bits.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// H(Z|U) in bits.
    pub fn distortion(&self) -> f64 {
        self.distortion
    }
}

/// How a capacity value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityMethod {
    Alternating,
    Grid,
    ClosedForm,
}

impl CapacityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CapacityMethod::Alternating => "alternating",
            CapacityMethod::Grid => "grid",
            CapacityMethod::ClosedForm => "closed_form",
        }
    }
}

/// Capacity value plus the optimizing quantizer and diagnostics. All rates
/// are in bits.
#[derive(Debug, Clone)]
pub struct CapacityReport {
    pub capacity: f64,
    pub quantizer: QuantizerDesign,
    pub r0_used: f64,
    pub constraint_slack: f64,
    pub method: CapacityMethod,
    pub restarts_used: usize,
    pub converged: bool,
}

/// Knobs for the alternating-minimization optimizer. The defaults are the
/// reference configuration; reports are reproducible bit-for-bit for a fixed
/// seed.
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    pub seed: u64,
    /// Random restarts per multiplier value, rows drawn uniformly from the
    /// simplex.
    pub restarts: usize,
    /// Points on the initial logarithmic multiplier grid.
    pub beta_grid: usize,
    /// Bisection refinements of the multiplier toward the rate constraint.
    pub bisection_steps: usize,
    /// Iteration cap per alternating-minimization run.
    pub max_iterations: usize,
    /// Stop a run when the Lagrangian changes by less than this.
    pub objective_tol: f64,
    /// Tolerance handed to the relay-link capacity computation.
    pub link_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 32,
            beta_grid: 24,
            bisection_steps: 60,
            max_iterations: 10_000,
            objective_tol: 1e-12,
            link_tol: 1e-12,
        }
    }
}

// ---------------------------------------------------------------------------
// Closed forms and bounds (binary uniform noise)
// ---------------------------------------------------------------------------

/// Capacity of the binary instance with Ber(1/2) noise:
/// 1 − h(h⁻¹(1−r0) ∗ delta).
pub fn capacity_closed_form_binary_uniform(r0: f64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r0) {
        return Err(Error::Domain(format!(
            "closed form: r0 = {r0} not in [0,1]"
        )));
    }
    let x = binary_entropy_inv(1.0 - r0)?;
    Ok(1.0 - binary_entropy(binary_convolve(x, delta)?)?)
}

/// Cut-set bound of the binary instance with Ber(1/2) noise:
/// min(r0, 1 − h(delta)).
pub fn cutset_bound_binary_uniform(r0: f64, delta: f64) -> Result<f64> {
    if !r0.is_finite() || r0 < 0.0 {
        return Err(Error::Domain(format!(
            "cut-set bound: r0 = {r0} must be finite and >= 0"
        )));
    }
    Ok(r0.min(1.0 - binary_entropy(delta)?))
}

/// Binary conditional entropy-power lower bound: when Z = Y1 xor Ber(delta)
/// with Z uniform, H(Y1|U) >= alpha forces H(Z|U) >= h(h⁻¹(alpha) ∗ delta).
pub fn mgl_conditional_entropy_bound(alpha: f64, delta: f64) -> Result<f64> {
    let x = binary_entropy_inv(alpha)?;
    binary_entropy(binary_convolve(x, delta)?)
}

/// No-relay baseline log2(m) − H(Z), the R0 = 0 corner.
pub fn direct_link_capacity(spec: &RelayChannelSpec) -> f64 {
    spec.log2_m() - entropy(spec.noise())
}

/// Capacity in the uncorrupted regime where the relay sees Z exactly
/// (relay_obs a deterministic permutation): min(log2 m − H(Z) + R0, log2 m)
/// under the uniform input. Serves as a consistency oracle for the numeric
/// optimizer at delta = 0.
pub fn no_corruption_capacity(spec: &RelayChannelSpec) -> Result<f64> {
    let obs = spec.relay_obs();
    let m = spec.m();
    if obs.num_outputs() != m {
        return Err(Error::Precondition(format!(
            "no_corruption_capacity: relay_obs is {}x{}, needs a {m}x{m} permutation",
            obs.num_inputs(),
            obs.num_outputs()
        )));
    }
    let mut seen = vec![false; m];
    for (i, row) in obs.rows().iter().enumerate() {
        let mut hit = None;
        for (j, &w) in row.iter().enumerate() {
            if w >= 1.0 - 1e-12 {
                hit = Some(j);
            } else if w > 1e-12 {
                return Err(Error::Precondition(format!(
                    "no_corruption_capacity: relay_obs row {i} is not deterministic"
                )));
            }
        }
        match hit {
            Some(j) if !seen[j] => seen[j] = true,
            _ => {
                return Err(Error::Precondition(format!(
                    "no_corruption_capacity: relay_obs row {i} is not part of a permutation"
                )))
            }
        }
    }
    let r0 = relay_link_capacity(spec, 1e-12)?;
    let log2m = spec.log2_m();
    Ok((log2m - entropy(spec.noise()) + r0).min(log2m))
}

// ---------------------------------------------------------------------------
// The bottleneck problem
// ---------------------------------------------------------------------------

/// Precomputed tables for evaluating quantizers against one spec.
pub(crate) struct BottleneckProblem {
    y1_size: usize,
    z_size: usize,
    /// Working auxiliary alphabet size, |Y1| + 2.
    u_size: usize,
    p_y1: Vec<f64>,
    /// p(z, y1), indexed [z][y1].
    p_zy: Vec<Vec<f64>>,
    /// p(z | y1), indexed [y1][z]; rows meaningful only on the support.
    cond_z: Vec<Vec<f64>>,
    /// y1 symbols with positive probability.
    support: Vec<usize>,
}

impl BottleneckProblem {
    pub(crate) fn from_spec(spec: &RelayChannelSpec) -> Self {
        let m = spec.m();
        let y1_size = spec.y1_size();
        let noise = spec.noise().probs();
        let obs = spec.relay_obs();
        let mut p_y1 = vec![0.0; y1_size];
        let mut p_zy = vec![vec![0.0; y1_size]; m];
        for z in 0..m {
            for y in 0..y1_size {
                let w = noise[z] * obs.row(z)[y];
                p_zy[z][y] = w;
                p_y1[y] += w;
            }
        }
        let mut cond_z = vec![vec![0.0; m]; y1_size];
        let mut support = Vec::new();
        for y in 0..y1_size {
            if p_y1[y] > 0.0 {
                support.push(y);
                for z in 0..m {
                    cond_z[y][z] = p_zy[z][y] / p_y1[y];
                }
            }
        }
        Self {
            y1_size,
            z_size: m,
            u_size: y1_size + 2,
            p_y1,
            p_zy,
            cond_z,
            support,
        }
    }

    /// Rate I(U;Y1) and distortion H(Z|U) of a quantizer, in bits.
    pub(crate) fn evaluate(&self, q: &[Vec<f64>]) -> (f64, f64) {
        let u_size = q[0].len();
        let mut p_u = vec![0.0; u_size];
        for &y in &self.support {
            let py = self.p_y1[y];
            for (pu, &w) in p_u.iter_mut().zip(&q[y]) {
                *pu += py * w;
            }
        }
        let mut rate = 0.0;
        for &y in &self.support {
            let py = self.p_y1[y];
            for (u, &w) in q[y].iter().enumerate() {
                if w > 0.0 && p_u[u] > 0.0 {
                    rate += py * w * (w / p_u[u]).log2();
                }
            }
        }
        let mut h_joint = 0.0;
        for z in 0..self.z_size {
            for u in 0..u_size {
                let mut pzu = 0.0;
                for &y in &self.support {
                    pzu += self.p_zy[z][y] * q[y][u];
                }
                h_joint -= xlog2(pzu);
            }
        }
        let h_u = entropy_slice(&p_u);
        (rate.max(0.0), h_joint - h_u)
    }

    /// One multiplier run of alternating minimization from `q0`.
    fn solve(&self, beta: f64, mut q: Vec<Vec<f64>>, opts: &OptimizerOptions) -> PointCandidate {
        let u_size = self.u_size;
        let mut p_u = vec![0.0; u_size];
        let mut log_cond_u = vec![vec![0.0f64; self.z_size]; u_size];
        let mut weights = vec![0.0f64; u_size];
        let mut div = vec![0.0f64; u_size];
        let mut prev_obj = f64::INFINITY;
        let mut converged = false;
        for _ in 0..opts.max_iterations {
            // Marginals of the current quantizer.
            p_u.fill(0.0);
            for &y in &self.support {
                let py = self.p_y1[y];
                for (pu, &w) in p_u.iter_mut().zip(&q[y]) {
                    *pu += py * w;
                }
            }
            for u in 0..u_size {
                if p_u[u] > 0.0 {
                    for z in 0..self.z_size {
                        let mut pzu = 0.0;
                        for &y in &self.support {
                            pzu += self.p_zy[z][y] * q[y][u];
                        }
                        log_cond_u[u][z] = if pzu > 0.0 {
                            (pzu / p_u[u]).log2()
                        } else {
                            f64::NEG_INFINITY
                        };
                    }
                }
            }
            // Row updates toward the stationary point of
            // H(Z|U) + beta I(U;Y1): q(u|y) ∝ p(u) 2^{-D(p(z|y) || p(z|u))/beta}.
            for &y in &self.support {
                let mut dmin = f64::INFINITY;
                for u in 0..u_size {
                    if p_u[u] > 0.0 {
                        let mut d = 0.0;
                        for z in 0..self.z_size {
                            let c = self.cond_z[y][z];
                            if c > 0.0 {
                                d += c * (c.log2() - log_cond_u[u][z]);
                            }
                        }
                        div[u] = d;
                        dmin = dmin.min(d);
                    } else {
                        div[u] = f64::INFINITY;
                    }
                }
                let mut norm = 0.0;
                for u in 0..u_size {
                    let w = if div[u].is_finite() {
                        p_u[u] * (-(div[u] - dmin) / beta).exp2()
                    } else {
                        0.0
                    };
                    weights[u] = w;
                    norm += w;
                }
                for u in 0..u_size {
                    q[y][u] = weights[u] / norm;
                }
            }
            let (rate, dist) = self.evaluate(&q);
            let obj = dist + beta * rate;
            if (prev_obj - obj).abs() < opts.objective_tol {
                converged = true;
                break;
            }
            prev_obj = obj;
        }
        let (rate, dist) = self.evaluate(&q);
        PointCandidate {
            rate,
            dist,
            q,
            converged,
        }
    }

    /// Best of `opts.restarts` random restarts at one multiplier.
    fn solve_multi(
        &self,
        beta: f64,
        opts: &OptimizerOptions,
        stream: u64,
        restarts_used: &mut usize,
    ) -> PointCandidate {
        let mut best: Option<(f64, PointCandidate)> = None;
        for r in 0..opts.restarts.max(1) {
            let mut rng =
                SplitMix64::substream(opts.seed, DOMAIN_OPTIMIZER, stream * 0x1_0000 + r as u64);
            let q0: Vec<Vec<f64>> = (0..self.y1_size)
                .map(|_| rng.simplex(self.u_size))
                .collect();
            let cand = self.solve(beta, q0, opts);
            *restarts_used += 1;
            let obj = cand.dist + beta * cand.rate;
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, cand));
            }
        }
        best.expect("at least one restart").1
    }

    /// Single-column quantizer: U constant, rate 0, distortion H(Z).
    fn trivial_rows(&self) -> Vec<Vec<f64>> {
        (0..self.y1_size)
            .map(|_| {
                let mut row = vec![0.0; self.u_size];
                row[0] = 1.0;
                row
            })
            .collect()
    }

    /// Deterministic copy quantizer U = Y1.
    fn hard_rows(&self) -> Vec<Vec<f64>> {
        (0..self.y1_size)
            .map(|y| {
                let mut row = vec![0.0; self.u_size];
                row[y] = 1.0;
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct PointCandidate {
    rate: f64,
    dist: f64,
    q: Vec<Vec<f64>>,
    converged: bool,
}

// ---------------------------------------------------------------------------
// Constrained optimization
// ---------------------------------------------------------------------------

fn make_report(
    spec: &RelayChannelSpec,
    q_rows: Vec<Vec<f64>>,
    r0: f64,
    method: CapacityMethod,
    restarts_used: usize,
    converged: bool,
) -> Result<CapacityReport> {
    let design = QuantizerDesign::new(Channel::new(q_rows)?, spec)?;
    Ok(CapacityReport {
        capacity: spec.log2_m() - design.distortion(),
        r0_used: r0,
        constraint_slack: r0 - design.rate(),
        quantizer: design,
        method,
        restarts_used,
        converged,
    })
}

/// Best achievable distortion at rate budget `r0` from a candidate set:
/// either a single feasible point or the best realizable two-point
/// time-share straddling the budget. Pairs are tried in ascending chord
/// value so a pair whose combined support exceeds the alphabet budget
/// degrades gracefully to the next one.
fn best_solution(
    prob: &BottleneckProblem,
    cands: &[PointCandidate],
    keep: impl Fn(&PointCandidate) -> bool,
    r0: f64,
) -> Option<(Vec<Vec<f64>>, f64)> {
    let idx: Vec<usize> = (0..cands.len()).filter(|&i| keep(&cands[i])).collect();
    // Ties within 1e-12 prefer the narrower alphabet: canonical quantizers
    // over ones padded with duplicate clusters.
    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    let mut best_cols = usize::MAX;
    for &i in &idx {
        let c = &cands[i];
        if c.rate > r0 + RATE_SLACK {
            continue;
        }
        let cols = c.q[0].len();
        let replace = match &best {
            None => true,
            Some((_, d)) => c.dist < *d - 1e-12 || (c.dist < *d + 1e-12 && cols < best_cols),
        };
        if replace {
            best = Some((c.q.clone(), c.dist));
            best_cols = cols;
        }
    }
    let best_pure = best.as_ref().map(|(_, d)| *d)?;
    // Chords across the budget, best value first.
    let mut pairs: Vec<(f64, f64, usize, usize)> = Vec::new();
    for &a in &idx {
        for &b in &idx {
            let (ca, cb) = (&cands[a], &cands[b]);
            if ca.rate <= r0 && cb.rate > r0 {
                let lam = (cb.rate - r0) / (cb.rate - ca.rate);
                let chord = lam * ca.dist + (1.0 - lam) * cb.dist;
                if chord < best_pure - 1e-12 {
                    pairs.push((chord, lam, a, b));
                }
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)).then(x.3.cmp(&y.3)));
    for (_, lam, a, b) in pairs {
        if let Some(rows) = timeshare_rows(prob, &cands[a], &cands[b], lam) {
            let (mr, md) = prob.evaluate(&rows);
            if mr <= r0 + RATE_SLACK && md < best_pure {
                return Some((rows, md));
            }
        }
    }
    best
}

/// Collapse columns whose induced posteriors p(z|u) nearly coincide
/// (converged soft solutions often hold mirrored duplicate clusters whose
/// split direction is almost flat) and drop dead columns. The caller
/// re-solves from the merged matrix, which repairs the merge error within
/// the narrow support. Returns None when there is nothing to merge.
fn merge_equivalent_columns(prob: &BottleneckProblem, q: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let u_size = q[0].len();
    let mut p_u = vec![0.0; u_size];
    for &y in &prob.support {
        for (pu, &w) in p_u.iter_mut().zip(&q[y]) {
            *pu += prob.p_y1[y] * w;
        }
    }
    let cond = |u: usize| -> Vec<f64> {
        (0..prob.z_size)
            .map(|z| {
                let mut pzu = 0.0;
                for &y in &prob.support {
                    pzu += prob.p_zy[z][y] * q[y][u];
                }
                pzu / p_u[u]
            })
            .collect()
    };
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for u in 0..u_size {
        if p_u[u] <= 0.0 {
            continue;
        }
        let c = cond(u);
        match groups
            .iter_mut()
            .find(|(rep, _)| rep.iter().zip(&c).all(|(a, b)| (a - b).abs() <= 1e-3))
        {
            Some((_, members)) => members.push(u),
            None => groups.push((c, vec![u])),
        }
    }
    if groups.len() == u_size {
        return None;
    }
    let mut rows = Vec::with_capacity(prob.y1_size);
    for y in 0..prob.y1_size {
        let mut row: Vec<f64> = groups
            .iter()
            .map(|(_, members)| members.iter().map(|&u| q[y][u]).sum())
            .collect();
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            for x in &mut row {
                *x /= s;
            }
        } else {
            let k = row.len() as f64;
            row.fill(1.0 / k);
        }
        rows.push(row);
    }
    Some(rows)
}

/// Drop columns that carry no probability mass.
fn strip_dead_columns(prob: &BottleneckProblem, q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let live = support_columns(prob, q);
    if live.len() == q[0].len() {
        return q.to_vec();
    }
    q.iter()
        .map(|row| live.iter().map(|&u| row[u]).collect())
        .collect()
}

/// Columns of `q` that carry probability mass under p(y1).
fn support_columns(prob: &BottleneckProblem, q: &[Vec<f64>]) -> Vec<usize> {
    let u_size = q[0].len();
    let mut mass = vec![0.0; u_size];
    for &y in &prob.support {
        for (m, &w) in mass.iter_mut().zip(&q[y]) {
            *m += prob.p_y1[y] * w;
        }
    }
    (0..u_size).filter(|&u| mass[u] > 0.0).collect()
}

/// Time-share two quantizers in the (rate, distortion) plane by augmenting
/// the alphabet: side A gets weight `lam`, side B the rest. Returns None if
/// the combined support exceeds the |Y1|+2 budget.
fn timeshare_rows(
    prob: &BottleneckProblem,
    a: &PointCandidate,
    b: &PointCandidate,
    lam: f64,
) -> Option<Vec<Vec<f64>>> {
    let sa = support_columns(prob, &a.q);
    let sb = support_columns(prob, &b.q);
    if sa.len() + sb.len() > prob.u_size {
        return None;
    }
    let mut rows = Vec::with_capacity(prob.y1_size);
    for y in 0..prob.y1_size {
        let mut row: Vec<f64> = sa
            .iter()
            .map(|&u| lam * a.q[y][u])
            .chain(sb.iter().map(|&u| (1.0 - lam) * b.q[y][u]))
            .collect();
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            for x in &mut row {
                *x /= s;
            }
        } else {
            let k = row.len() as f64;
            row.fill(1.0 / k);
        }
        rows.push(row);
    }
    Some(rows)
}

/// Capacity by constrained optimization over the quantizer, returning the
/// optimizing design. The value is a valid lower bound on the true maximum;
/// on small alphabets it is certified by [`capacity_grid_oracle`].
pub fn capacity_numeric(
    spec: &RelayChannelSpec,
    opts: &OptimizerOptions,
) -> Result<CapacityReport> {
    let r0 = relay_link_capacity(spec, opts.link_tol)?;
    let prob = BottleneckProblem::from_spec(spec);

    // Degenerate regimes collapse to a constant U.
    let rows_identical = prob.support.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        (0..prob.z_size).all(|z| (prob.cond_z[a][z] - prob.cond_z[b][z]).abs() <= 1e-14)
    });
    if r0 <= 1e-12 || rows_identical {
        return make_report(
            spec,
            prob.trivial_rows(),
            r0,
            CapacityMethod::ClosedForm,
            0,
            true,
        );
    }

    // If the link can carry Y1 losslessly, copying is optimal:
    // H(Z|U) >= H(Z|Y1) for every U on the chain Z - Y1 - U.
    let hard = prob.hard_rows();
    let (hard_rate, _) = prob.evaluate(&hard);
    if hard_rate <= r0 + RATE_SLACK {
        return make_report(spec, hard, r0, CapacityMethod::ClosedForm, 0, true);
    }

    let mut restarts_used = 0usize;
    let mut cands: Vec<PointCandidate> = Vec::new();

    // Exact extreme points: the constant and copy quantizers and, when the
    // count is small, every deterministic map into the augmented alphabet.
    for rows in [prob.trivial_rows(), prob.hard_rows()] {
        let (rate, dist) = prob.evaluate(&rows);
        cands.push(PointCandidate {
            rate,
            dist,
            q: rows,
            converged: true,
        });
    }
    let det_count = (prob.u_size as u128).checked_pow(prob.support.len() as u32);
    if let Some(count) = det_count.filter(|&c| c <= 4096) {
        for code in 0..count as u64 {
            let mut rows = vec![vec![0.0; prob.u_size]; prob.y1_size];
            let mut c = code;
            for &y in &prob.support {
                rows[y][(c % prob.u_size as u64) as usize] = 1.0;
                c /= prob.u_size as u64;
            }
            for y in 0..prob.y1_size {
                if !prob.support.contains(&y) {
                    rows[y][0] = 1.0;
                }
            }
            let (rate, dist) = prob.evaluate(&rows);
            cands.push(PointCandidate {
                rate,
                dist,
                q: rows,
                converged: true,
            });
        }
    }

    // Multiplier sweep. Supporting slopes of the distortion-rate curve lie
    // in [0, 1] (H(Z) - H(Z|U) <= I(U;Y1)), so a grid on [1e-5, 1.25] spans
    // the whole trade-off.
    // After each solve, also push a canonical narrow-alphabet variant:
    // merge near-duplicate clusters, re-solve at the same multiplier within
    // the reduced support (dead columns stay dead), and strip them.
    let push_with_merged = |cands: &mut Vec<PointCandidate>,
                            prob: &BottleneckProblem,
                            beta: f64,
                            cand: PointCandidate,
                            restarts_used: &mut usize| {
        if let Some(rows) = merge_equivalent_columns(prob, &cand.q) {
            let mut padded = rows;
            for row in &mut padded {
                row.resize(prob.u_size, 0.0);
            }
            let refined = prob.solve(beta, padded, opts);
            *restarts_used += 1;
            let stripped = strip_dead_columns(prob, &refined.q);
            let (rate, dist) = prob.evaluate(&stripped);
            cands.push(PointCandidate {
                rate,
                dist,
                q: stripped,
                converged: refined.converged,
            });
        }
        cands.push(cand);
    };

    let grid_n = opts.beta_grid.max(2);
    let (b_lo, b_hi) = (1e-5f64, 1.25f64);
    let mut stream = 0u64;
    let mut grid_points: Vec<(f64, f64)> = Vec::new(); // (beta, rate)
    for i in 0..grid_n {
        let t = i as f64 / (grid_n - 1) as f64;
        let beta = b_lo * (b_hi / b_lo).powf(t);
        let cand = prob.solve_multi(beta, opts, stream, &mut restarts_used);
        stream += 1;
        grid_points.push((beta, cand.rate));
        push_with_merged(&mut cands, &prob, beta, cand, &mut restarts_used);
    }

    // Bracket the constraint on the grid (rate decreases with beta), then
    // bisect the multiplier toward rate = R0.
    let mut blo = b_lo;
    let mut bhi = b_hi;
    let mut found = false;
    for &(beta, rate) in &grid_points {
        if rate > r0 {
            blo = beta;
        } else if !found {
            bhi = beta;
            found = true;
        }
    }
    if !found {
        bhi = b_hi * 16.0;
    }
    for _ in 0..opts.bisection_steps {
        let bmid = (0.5 * (blo.ln() + bhi.ln())).exp();
        let cand = prob.solve_multi(bmid, opts, stream, &mut restarts_used);
        stream += 1;
        let rate = cand.rate;
        push_with_merged(&mut cands, &prob, bmid, cand, &mut restarts_used);
        if rate > r0 {
            blo = bmid;
        } else {
            bhi = bmid;
        }
    }

    // Entrywise polish: bisect along the straight line between the best
    // feasible point and the most useful infeasible point of the same shape
    // to land on the constraint exactly without enlarging the alphabet.
    // The resulting pure point then blocks needless alphabet-augmenting
    // time-shares between nearly identical solutions.
    let polish_pair = {
        let mut best_feas: Option<usize> = None;
        for (i, c) in cands.iter().enumerate() {
            if c.rate > r0 + RATE_SLACK {
                continue;
            }
            let replace = match best_feas {
                None => true,
                Some(j) => {
                    c.dist < cands[j].dist - 1e-12
                        || (c.dist < cands[j].dist + 1e-12 && c.q[0].len() < cands[j].q[0].len())
                }
            };
            if replace {
                best_feas = Some(i);
            }
        }
        best_feas.and_then(|ia| {
            let a = &cands[ia];
            let cols = a.q[0].len();
            let mut best_pair: Option<(f64, usize)> = None;
            for (i, c) in cands.iter().enumerate() {
                if c.rate > r0 && c.q[0].len() == cols {
                    let lam = (c.rate - r0) / (c.rate - a.rate);
                    let chord = lam * a.dist + (1.0 - lam) * c.dist;
                    if best_pair.is_none_or(|(v, _)| chord < v) {
                        best_pair = Some((chord, i));
                    }
                }
            }
            best_pair.map(|(_, ib)| (ia, ib))
        })
    };
    if let Some((ia, ib)) = polish_pair {
        let (a, b) = (cands[ia].clone(), cands[ib].clone());
        let (mut t_lo, mut t_hi) = (0.0f64, 1.0f64);
        let mut rows_lo = a.q.clone();
        for _ in 0..100 {
            let t = 0.5 * (t_lo + t_hi);
            let rows: Vec<Vec<f64>> =
                a.q.iter()
                    .zip(&b.q)
                    .map(|(ra, rb)| {
                        ra.iter()
                            .zip(rb)
                            .map(|(&x, &y)| (1.0 - t) * x + t * y)
                            .collect()
                    })
                    .collect();
            let (rate, _) = prob.evaluate(&rows);
            if rate <= r0 {
                t_lo = t;
                rows_lo = rows;
            } else {
                t_hi = t;
            }
        }
        let (rate, dist) = prob.evaluate(&rows_lo);
        cands.push(PointCandidate {
            rate,
            dist,
            q: rows_lo,
            converged: a.converged && b.converged,
        });
    }

    // Select from converged candidates; a non-converged iterate only
    // carries the report (and clears the flag) when it strictly improves
    // the value.
    let from_converged = best_solution(&prob, &cands, |c| c.converged, r0)
        .expect("the constant quantizer is always feasible");
    let (winner_rows, winner_converged) = match best_solution(&prob, &cands, |_| true, r0) {
        Some((rows, dist)) if dist < from_converged.1 - 1e-9 => (rows, false),
        _ => (from_converged.0, true),
    };

    make_report(
        spec,
        winner_rows,
        r0,
        CapacityMethod::Alternating,
        restarts_used,
        winner_converged,
    )
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

/// Work cap for one exhaustive pass: skip auxiliary alphabet sizes whose
/// enumeration would exceed this many matrices.
const GRID_WORK_CAP: u128 = 100_000_000;

fn compositions(total: usize, parts: usize) -> Vec<Vec<f64>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / total as f64).collect())
        .collect()
}

/// Exhaustive search over quantizers whose rows lie on the simplex grid with
/// `resolution` steps per coordinate, for every auxiliary alphabet size up
/// to min(|Y1|+2, 5) whose enumeration fits the work cap. Deterministic;
/// returns the best feasible grid point.
pub fn capacity_grid_oracle(spec: &RelayChannelSpec, resolution: usize) -> Result<CapacityReport> {
    let y1 = spec.y1_size();
    if y1 > 3 {
        return Err(Error::Guard(format!(
            "grid oracle guard: |Y1| = {y1} exceeds 3 (and |U| is capped at 5)"
        )));
    }
    if resolution == 0 {
        return Err(Error::Domain("grid oracle: resolution must be >= 1".into()));
    }
    let r0 = relay_link_capacity(spec, 1e-12)?;
    let prob = BottleneckProblem::from_spec(spec);
    let u_max = (y1 + 2).min(5);

    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for u in 1..=u_max {
        let points = compositions(resolution, u);
        let per_row = points.len() as u128;
        if per_row.pow(y1 as u32) > GRID_WORK_CAP {
            continue;
        }
        let h_rows: Vec<f64> = points.iter().map(|p| entropy_slice(p)).collect();
        let mut idx = vec![0usize; y1];
        loop {
            // rate = H(p_u) - sum_y p(y1) H(row_y); distortion via p(z,u).
            let mut p_u = vec![0.0; u];
            for (y, &ri) in idx.iter().enumerate() {
                let py = prob.p_y1[y];
                for (pu, &w) in p_u.iter_mut().zip(&points[ri]) {
                    *pu += py * w;
                }
            }
            let mut rate = entropy_slice(&p_u);
            for (y, &ri) in idx.iter().enumerate() {
                rate -= prob.p_y1[y] * h_rows[ri];
            }
            if rate <= r0 + RATE_SLACK {
                let mut h_joint = 0.0;
                for z in 0..prob.z_size {
                    for uu in 0..u {
                        let mut pzu = 0.0;
                        for (y, &ri) in idx.iter().enumerate() {
                            pzu += prob.p_zy[z][y] * points[ri][uu];
                        }
                        h_joint -= xlog2(pzu);
                    }
                }
                let dist = h_joint - entropy_slice(&p_u);
                let cap = spec.log2_m() - dist;
                if best.as_ref().is_none_or(|(b, _)| cap > *b) {
                    let rows = idx.iter().map(|&ri| points[ri].clone()).collect();
                    best = Some((cap, rows));
                }
            }
            // odometer
            let mut k = y1;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < points.len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
    }
    let (_, rows) = best.expect("u = 1 is always enumerable and feasible");
    make_report(spec, rows, r0, CapacityMethod::Grid, 0, true)
}

// ---------------------------------------------------------------------------
// Rate-limited state information equivalence
// ---------------------------------------------------------------------------

/// Rate of the state-information formulation: I(X;Y|U) under the uniform
/// input, with the state identified with Y1 and its description with U.
/// Also verifies numerically that conditioning on Y does not change the
/// description rate, I(U;Y1|Y) = I(U;Y1), which the modular structure
/// forces under uniform inputs.
pub fn ahlswede_han_rate(spec: &RelayChannelSpec, q: &QuantizerDesign) -> Result<f64> {
    let r0 = relay_link_capacity(spec, 1e-12)?;
    if q.rate() > r0 + RATE_SLACK {
        return Err(Error::Precondition(format!(
            "ahlswede_han_rate: quantizer rate {} exceeds R0 = {r0}",
            q.rate()
        )));
    }
    let m = spec.m();
    let y1s = spec.y1_size();
    let us = q.q().num_outputs();
    if q.q().num_inputs() != y1s {
        return Err(Error::Dimension(format!(
            "ahlswede_han_rate: quantizer rows {} vs |Y1| {y1s}",
            q.q().num_inputs()
        )));
    }
    let noise = spec.noise().probs();
    let obs = spec.relay_obs();
    let inv_m = 1.0 / m as f64;

    // p(z, u) through the chain.
    let mut pzu = vec![vec![0.0; us]; m];
    for z in 0..m {
        for y in 0..y1s {
            let w = noise[z] * obs.row(z)[y];
            for u in 0..us {
                pzu[z][u] += w * q.q().row(y)[u];
            }
        }
    }

    // Joint of (X, Y, U) under uniform X with Y = X + Z mod m.
    let mut p_xyu = vec![0.0; m * m * us];
    for x in 0..m {
        for z in 0..m {
            let y = (x + z) % m;
            for u in 0..us {
                p_xyu[(x * m + y) * us + u] += inv_m * pzu[z][u];
            }
        }
    }
    let mut p_xu = vec![0.0; m * us];
    let mut p_yu = vec![0.0; m * us];
    let mut p_u = vec![0.0; us];
    for x in 0..m {
        for y in 0..m {
            for u in 0..us {
                let w = p_xyu[(x * m + y) * us + u];
                p_xu[x * us + u] += w;
                p_yu[y * us + u] += w;
                p_u[u] += w;
            }
        }
    }
    let i_xy_given_u =
        entropy_slice(&p_xu) + entropy_slice(&p_yu) - entropy_slice(&p_u) - entropy_slice(&p_xyu);

    // Description-rate check: I(U;Y1|Y) vs I(U;Y1) from the (Y, Y1, U) law.
    let mut p_yy1u = vec![0.0; m * y1s * us];
    for x in 0..m {
        for z in 0..m {
            let y = (x + z) % m;
            for y1 in 0..y1s {
                let w = inv_m * noise[z] * obs.row(z)[y1];
                for u in 0..us {
                    p_yy1u[(y * y1s + y1) * us + u] += w * q.q().row(y1)[u];
                }
            }
        }
    }
    let mut p_y = vec![0.0; m];
    let mut p_yy1 = vec![0.0; m * y1s];
    let mut p_yu2 = vec![0.0; m * us];
    let mut p_y1u = vec![0.0; y1s * us];
    for y in 0..m {
        for y1 in 0..y1s {
            for u in 0..us {
                let w = p_yy1u[(y * y1s + y1) * us + u];
                p_y[y] += w;
                p_yy1[y * y1s + y1] += w;
                p_yu2[y * us + u] += w;
                p_y1u[y1 * us + u] += w;
            }
        }
    }
    let i_uy1_given_y = entropy_slice(&p_yy1) + entropy_slice(&p_yu2)
        - entropy_slice(&p_y)
        - entropy_slice(&p_yy1u);
    let mut p_y1 = vec![0.0; y1s];
    for y1 in 0..y1s {
        for u in 0..us {
            p_y1[y1] += p_y1u[y1 * us + u];
        }
    }
    let i_uy1 = entropy_slice(&p_y1) + entropy_slice(&p_u) - entropy_slice(&p_y1u);
    if (i_uy1_given_y - i_uy1).abs() > 1e-10 {
        return Err(Error::Validation(format!(
            "ahlswede_han_rate: I(U;Y1|Y) = {i_uy1_given_y} differs from I(U;Y1) = {i_uy1}"
        )));
    }
    Ok(i_xy_given_u)
}
