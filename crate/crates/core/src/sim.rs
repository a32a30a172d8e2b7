//! Monte Carlo simulation of the block quantize-and-forward scheme at small
//! blocklength: random codebooks, relay quantization by joint strong
//! typicality, error-free index transport over the relay pipe, and message
//! decoding at the destination, with per-error-event accounting.
//!
//! Trials draw from per-trial substreams of a counter-based generator, so a
//! report is bit-identical for a fixed seed regardless of scheduling.

use crate::capacity::QuantizerDesign;
use crate::channel::{relay_link_capacity, RelayChannelSpec};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const DOMAIN_X_CODEBOOK: u64 = 2;
const DOMAIN_U_CODEBOOK: u64 = 3;
const DOMAIN_TRIAL: u64 = 4;

/// Largest codebook exponent: ceil(n * rate) and the U-codebook exponent
/// must stay at or below this.
pub const CODEBOOK_BITS_GUARD: u32 = 24;

const WILSON_Z95: f64 = 1.959963984540054;

/// Destination decoding rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    MaxLikelihood,
    Typicality,
}

impl DecoderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::MaxLikelihood => "ml",
            DecoderKind::Typicality => "typ",
        }
    }
}

/// Simulation configuration. `typ_tol` is the per-pair slack of the strong
/// typicality test; the default is 0.05 + 1/sqrt(n).
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Message rate R in bits per channel use; the codebook holds
    /// 2^ceil(nR) words.
    pub rate: f64,
    /// The U codebook holds 2^ceil(n (I(U;Y1) + margin)) words.
    pub u_rate_margin: f64,
    pub trials: u64,
    pub seed: u64,
    pub decoder: DecoderKind,
    pub typ_tol: f64,
    /// Check that the quantizer rate fits the relay pipe before running.
    pub enforce_pipe_rate: bool,
    pub quantizer: QuantizerDesign,
}

impl SimConfig {
    pub fn new(n: usize, rate: f64, quantizer: QuantizerDesign) -> Self {
        Self {
            n,
            rate,
            u_rate_margin: 0.1,
            trials: 10_000,
            seed: 0,
            decoder: DecoderKind::MaxLikelihood,
            typ_tol: 0.05 + 1.0 / (n.max(1) as f64).sqrt(),
            enforce_pipe_rate: true,
            quantizer,
        }
    }

    fn x_words(&self) -> Result<usize> {
        let bits = (self.n as f64 * self.rate).ceil();
        if bits > CODEBOOK_BITS_GUARD as f64 {
            return Err(Error::Guard(format!(
                "codebook-size guard: ceil(n rate) = {bits} exceeds {CODEBOOK_BITS_GUARD} bits"
            )));
        }
        Ok(1usize << bits.max(0.0) as u32)
    }

    fn u_words(&self) -> Result<usize> {
        let bits = (self.n as f64 * (self.quantizer.rate() + self.u_rate_margin)).ceil();
        if bits > CODEBOOK_BITS_GUARD as f64 {
            return Err(Error::Guard(format!(
                "codebook-size guard: ceil(n (I(U;Y1) + margin)) = {bits} exceeds \
                 {CODEBOOK_BITS_GUARD} bits"
            )));
        }
        Ok(1usize << bits.max(0.0) as u32)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("sim: n must be >= 1".into()));
        }
        if !self.rate.is_finite() || self.rate <= 0.0 {
            return Err(Error::Validation(format!(
                "sim: rate {} must be > 0",
                self.rate
            )));
        }
        if self.trials == 0 {
            return Err(Error::Validation("sim: trials must be >= 1".into()));
        }
        if self.typ_tol.is_nan() || self.typ_tol <= 0.0 {
            return Err(Error::Validation(format!(
                "sim: typ_tol {} must be > 0",
                self.typ_tol
            )));
        }
        if !self.u_rate_margin.is_finite() || self.u_rate_margin < 0.0 {
            return Err(Error::Validation(format!(
                "sim: u_rate_margin {} must be >= 0",
                self.u_rate_margin
            )));
        }
        self.x_words()?;
        self.u_words()?;
        Ok(())
    }
}

/// Monte Carlo estimates with per-error-event counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub block_error_rate: f64,
    pub wilson_ci95: (f64, f64),
    /// Relay found no typical codeword (index 0 sent instead).
    pub quantize_failures: u64,
    /// Decoder output differed from the sent message (or was ambiguous).
    pub decode_errors: u64,
    /// The realized (x, y, y1) triple failed the typicality diagnostic.
    pub atypical_source: u64,
    pub trials_run: u64,
    pub config: SimConfig,
}

/// Wilson 95% score interval for k successes out of n.
pub fn wilson_ci95(k: u64, n: u64) -> (f64, f64) {
    let z = WILSON_Z95;
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

// ---------------------------------------------------------------------------
// Codebooks
// ---------------------------------------------------------------------------

/// The message and quantization codebooks, stored flat with stride n.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebooks {
    n: usize,
    x_words: usize,
    u_words: usize,
    x: Vec<u16>,
    u: Vec<u16>,
}

impl Codebooks {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_words(&self) -> usize {
        self.x_words
    }

    pub fn u_words(&self) -> usize {
        self.u_words
    }

    pub fn x_word(&self, w: usize) -> &[u16] {
        &self.x[w * self.n..(w + 1) * self.n]
    }

    pub fn u_word(&self, t: usize) -> &[u16] {
        &self.u[t * self.n..(t + 1) * self.n]
    }

    /// Assemble codebooks from explicit words (used by tests).
    pub fn from_words(n: usize, x: Vec<Vec<u16>>, u: Vec<Vec<u16>>) -> Result<Self> {
        if x.is_empty() || u.is_empty() || x.iter().chain(&u).any(|w| w.len() != n) {
            return Err(Error::Dimension(
                "codebooks: every word must have length n".into(),
            ));
        }
        Ok(Self {
            n,
            x_words: x.len(),
            u_words: u.len(),
            x: x.into_iter().flatten().collect(),
            u: u.into_iter().flatten().collect(),
        })
    }
}

/// Draw the X codebook i.i.d. uniform over the input alphabet and the U
/// codebook i.i.d. from the quantizer-induced marginal p(u). Fully
/// determined by the config seed.
pub fn build_codebooks(config: &SimConfig, spec: &RelayChannelSpec) -> Result<Codebooks> {
    config.validate()?;
    let model = QfScheme::new(spec, &config.quantizer)?;
    let n = config.n;
    let x_words = config.x_words()?;
    let u_words = config.u_words()?;
    let m = spec.m() as u64;

    let mut rng = SplitMix64::substream(config.seed, DOMAIN_X_CODEBOOK, 0);
    let mut x = Vec::with_capacity(x_words * n);
    for _ in 0..x_words * n {
        x.push(rng.next_below(m) as u16);
    }
    let mut rng = SplitMix64::substream(config.seed, DOMAIN_U_CODEBOOK, 0);
    let mut u = Vec::with_capacity(u_words * n);
    for _ in 0..u_words * n {
        u.push(rng.sample(&model.p_u) as u16);
    }
    Ok(Codebooks {
        n,
        x_words,
        u_words,
        x,
        u,
    })
}

// ---------------------------------------------------------------------------
// The scheme
// ---------------------------------------------------------------------------

/// Precomputed single-letter laws of one (spec, quantizer) pair, shared by
/// the relay and destination operations.
#[derive(Debug, Clone)]
pub struct QfScheme {
    m: usize,
    y1_size: usize,
    u_size: usize,
    /// p(u, y1), indexed [u][y1].
    p_uy1: Vec<Vec<f64>>,
    p_u: Vec<f64>,
    /// ln p(z|u), NEG_INFINITY at zeros; indexed [u][z].
    log_pz_u: Vec<Vec<f64>>,
    /// p(x, y, u) under uniform X, flattened (x*m + y)*u_size + u.
    p_xyu: Vec<f64>,
    /// p(x, y, y1) under uniform X, flattened (x*m + y)*y1_size + y1.
    p_xyy1: Vec<f64>,
}

impl QfScheme {
    pub fn new(spec: &RelayChannelSpec, quantizer: &QuantizerDesign) -> Result<Self> {
        let m = spec.m();
        let y1_size = spec.y1_size();
        let q = quantizer.q();
        if q.num_inputs() != y1_size {
            return Err(Error::Dimension(format!(
                "scheme: quantizer rows {} vs |Y1| {y1_size}",
                q.num_inputs()
            )));
        }
        if m > u16::MAX as usize || y1_size > u16::MAX as usize {
            return Err(Error::Guard(
                "scheme: alphabets beyond u16 are not supported by the simulator".into(),
            ));
        }
        let u_size = q.num_outputs();
        let noise = spec.noise().probs();
        let obs = spec.relay_obs();

        let mut p_uy1 = vec![vec![0.0; y1_size]; u_size];
        let mut p_zu = vec![vec![0.0; u_size]; m];
        for z in 0..m {
            for y1 in 0..y1_size {
                let w = noise[z] * obs.row(z)[y1];
                for u in 0..u_size {
                    let wu = w * q.row(y1)[u];
                    p_uy1[u][y1] += wu;
                    p_zu[z][u] += wu;
                }
            }
        }
        let p_u: Vec<f64> = (0..u_size).map(|u| p_uy1[u].iter().sum()).collect();
        let log_pz_u = (0..u_size)
            .map(|u| {
                (0..m)
                    .map(|z| {
                        if p_u[u] > 0.0 && p_zu[z][u] > 0.0 {
                            (p_zu[z][u] / p_u[u]).ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect()
            })
            .collect();
        let inv_m = 1.0 / m as f64;
        let mut p_xyu = vec![0.0; m * m * u_size];
        let mut p_xyy1 = vec![0.0; m * m * y1_size];
        for x in 0..m {
            for z in 0..m {
                let y = (x + z) % m;
                for u in 0..u_size {
                    p_xyu[(x * m + y) * u_size + u] = inv_m * p_zu[z][u];
                }
                for y1 in 0..y1_size {
                    p_xyy1[(x * m + y) * y1_size + y1] = inv_m * noise[z] * obs.row(z)[y1];
                }
            }
        }
        Ok(Self {
            m,
            y1_size,
            u_size,
            p_uy1,
            p_u,
            log_pz_u,
            p_xyu,
            p_xyy1,
        })
    }

    /// Lowest U-codebook index whose joint empirical frequencies with the
    /// observed block deviate from p(u, y1) by at most `typ_tol` per pair;
    /// None when no codeword qualifies (the E2-analog outcome).
    pub fn relay_quantize(
        &self,
        y1_block: &[u16],
        books: &Codebooks,
        typ_tol: f64,
    ) -> Option<usize> {
        let n = y1_block.len();
        let inv_n = 1.0 / n as f64;
        let mut counts = vec![0u32; self.u_size * self.y1_size];
        't: for t in 0..books.u_words() {
            let word = books.u_word(t);
            counts.fill(0);
            for (&u, &y1) in word.iter().zip(y1_block) {
                counts[u as usize * self.y1_size + y1 as usize] += 1;
            }
            for u in 0..self.u_size {
                for y1 in 0..self.y1_size {
                    let freq = counts[u * self.y1_size + y1] as f64 * inv_n;
                    if (freq - self.p_uy1[u][y1]).abs() > typ_tol {
                        continue 't;
                    }
                }
            }
            return Some(t);
        }
        None
    }

    /// Decode the message index from the direct observation and the decoded
    /// quantization word. Ties break to the lowest index; the typicality
    /// decoder returns None unless exactly one codeword qualifies (the
    /// E5-analog outcome).
    pub fn destination_decode(
        &self,
        y_block: &[u16],
        u_block: &[u16],
        books: &Codebooks,
        decoder: DecoderKind,
        typ_tol: f64,
    ) -> Option<usize> {
        match decoder {
            DecoderKind::MaxLikelihood => {
                let mut best = 0usize;
                let mut best_score = f64::NEG_INFINITY;
                for w in 0..books.x_words() {
                    let word = books.x_word(w);
                    let mut score = 0.0;
                    for i in 0..y_block.len() {
                        let z = (y_block[i] as usize + self.m - word[i] as usize) % self.m;
                        score += self.log_pz_u[u_block[i] as usize][z];
                        if score == f64::NEG_INFINITY {
                            break;
                        }
                    }
                    if score > best_score {
                        best_score = score;
                        best = w;
                    }
                }
                Some(best)
            }
            DecoderKind::Typicality => {
                let n = y_block.len();
                let inv_n = 1.0 / n as f64;
                let mut counts = vec![0u32; self.m * self.m * self.u_size];
                let mut hit = None;
                'w: for w in 0..books.x_words() {
                    let word = books.x_word(w);
                    counts.fill(0);
                    for i in 0..n {
                        let idx = (word[i] as usize * self.m + y_block[i] as usize) * self.u_size
                            + u_block[i] as usize;
                        counts[idx] += 1;
                    }
                    for (idx, &c) in counts.iter().enumerate() {
                        if (c as f64 * inv_n - self.p_xyu[idx]).abs() > typ_tol {
                            continue 'w;
                        }
                    }
                    if hit.is_some() {
                        return None; // ambiguous
                    }
                    hit = Some(w);
                }
                hit
            }
        }
    }

    fn source_triple_typical(&self, x: &[u16], y: &[u16], y1: &[u16], typ_tol: f64) -> bool {
        let n = x.len();
        let inv_n = 1.0 / n as f64;
        let mut counts = vec![0u32; self.m * self.m * self.y1_size];
        for i in 0..n {
            counts[(x[i] as usize * self.m + y[i] as usize) * self.y1_size + y1[i] as usize] += 1;
        }
        counts
            .iter()
            .enumerate()
            .all(|(idx, &c)| (c as f64 * inv_n - self.p_xyy1[idx]).abs() <= typ_tol)
    }
}

/// Run independent single-block experiments of the quantize-and-forward
/// scheme: draw a message and the noise variables, quantize at the relay,
/// carry the index over the error-free pipe, decode, and tally the events.
pub fn simulate(spec: &RelayChannelSpec, config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    if config.enforce_pipe_rate {
        let r0 = relay_link_capacity(spec, 1e-12)?;
        if config.quantizer.rate() > r0 + 1e-9 {
            return Err(Error::Precondition(format!(
                "sim: quantizer rate {} exceeds the relay pipe rate R0 = {r0}",
                config.quantizer.rate()
            )));
        }
    }
    let scheme = QfScheme::new(spec, &config.quantizer)?;
    let books = build_codebooks(config, spec)?;
    let n = config.n;
    let m = spec.m();
    let noise = spec.noise().probs();
    let obs_rows = spec.relay_obs().rows();

    let mut errors = 0u64;
    let mut quantize_failures = 0u64;
    let mut atypical_source = 0u64;
    let mut z_block = vec![0u16; n];
    let mut y1_block = vec![0u16; n];
    let mut y_block = vec![0u16; n];
    for trial in 0..config.trials {
        let mut rng = SplitMix64::substream(config.seed, DOMAIN_TRIAL, trial);
        let w = rng.next_below(books.x_words() as u64) as usize;
        let x_word = books.x_word(w);
        for i in 0..n {
            let z = rng.sample(noise);
            z_block[i] = z as u16;
            y1_block[i] = rng.sample(&obs_rows[z]) as u16;
            y_block[i] = ((x_word[i] as usize + z) % m) as u16;
        }
        if !scheme.source_triple_typical(x_word, &y_block, &y1_block, config.typ_tol) {
            atypical_source += 1;
        }
        let t = match scheme.relay_quantize(&y1_block, &books, config.typ_tol) {
            Some(t) => t,
            None => {
                quantize_failures += 1;
                0
            }
        };
        let decoded = scheme.destination_decode(
            &y_block,
            books.u_word(t),
            &books,
            config.decoder,
            config.typ_tol,
        );
        if decoded != Some(w) {
            errors += 1;
        }
    }
    Ok(SimReport {
        block_error_rate: errors as f64 / config.trials as f64,
        wilson_ci95: wilson_ci95(errors, config.trials),
        quantize_failures,
        decode_errors: errors,
        atypical_source,
        trials_run: config.trials,
        config: config.clone(),
    })
}
