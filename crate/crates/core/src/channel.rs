//! The modulo-sum relay channel instance: the destination sees
//! Y = X + Z (mod m), the relay observes Y1 ~ p(y1|z) and talks to the
//! destination over a separate link, described either by an explicit rate or
//! by a discrete memoryless channel p(s|x1) whose capacity is computed with
//! Blahut–Arimoto.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::info::{joint_from, Channel, Joint, Pmf};

/// The relay-to-destination link.
#[derive(Debug, Clone, PartialEq)]
pub enum RelayLink {
    /// The link is abstracted to an error-free pipe of this rate (bits/use).
    ExplicitRate(f64),
    /// The link is a DMC p(s|x1); its capacity plays the role of the rate.
    Dmc(Channel),
}

/// A validated modulo-sum relay channel instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayChannelSpec {
    m: usize,
    noise: Pmf,
    relay_obs: Channel,
    relay_link: RelayLink,
}

impl RelayChannelSpec {
    pub fn new(m: usize, noise: Pmf, relay_obs: Channel, relay_link: RelayLink) -> Result<Self> {
        if m < 2 {
            return Err(Error::Validation(format!("spec: m = {m}, must be >= 2")));
        }
        if noise.len() != m {
            return Err(Error::Validation(format!(
                "spec: noise has {} entries, expected m = {m}",
                noise.len()
            )));
        }
        if relay_obs.num_inputs() != m {
            return Err(Error::Validation(format!(
                "spec: relay_obs has {} rows, expected m = {m}",
                relay_obs.num_inputs()
            )));
        }
        if let RelayLink::ExplicitRate(r) = relay_link {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::Validation(format!(
                    "spec: explicit relay rate {r} must be finite and >= 0"
                )));
            }
        }
        Ok(Self {
            m,
            noise,
            relay_obs,
            relay_link,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn noise(&self) -> &Pmf {
        &self.noise
    }

    pub fn relay_obs(&self) -> &Channel {
        &self.relay_obs
    }

    pub fn relay_link(&self) -> &RelayLink {
        &self.relay_link
    }

    /// Size of the relay observation alphabet.
    pub fn y1_size(&self) -> usize {
        self.relay_obs.num_outputs()
    }

    pub fn log2_m(&self) -> f64 {
        (self.m as f64).log2()
    }
}

/// Binary instance: Z ~ Ber(p), Y1 = Z xor Ber(delta), link = BSC(epsilon).
pub fn bsc_relay(p: f64, delta: f64, epsilon: f64) -> Result<RelayChannelSpec> {
    RelayChannelSpec::new(
        2,
        Pmf::bernoulli(p)?,
        Channel::bsc(delta)?,
        RelayLink::Dmc(Channel::bsc(epsilon)?),
    )
}

/// Binary instance with the link abstracted to an explicit rate.
pub fn bsc_relay_with_rate(p: f64, delta: f64, r0: f64) -> Result<RelayChannelSpec> {
    RelayChannelSpec::new(
        2,
        Pmf::bernoulli(p)?,
        Channel::bsc(delta)?,
        RelayLink::ExplicitRate(r0),
    )
}

// ---------------------------------------------------------------------------
// Relay link capacity (Blahut-Arimoto)
// ---------------------------------------------------------------------------

const BA_MAX_ITERATIONS: usize = 100_000;

/// Capacity of a DMC by Blahut–Arimoto alternating maximization, stopping
/// when the max-minus-mean divergence gap drops below `tol`. The returned
/// value is within `tol` of the true capacity.
pub fn dmc_capacity(ch: &Channel, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!(
            "dmc_capacity: tol {tol} must be > 0"
        )));
    }
    let k = ch.num_inputs();
    let cols = ch.num_outputs();
    let mut p = vec![1.0 / k as f64; k];
    let mut q = vec![0.0f64; cols];
    let mut d = vec![0.0f64; k];
    let mut i_lower = 0.0;
    for _ in 0..BA_MAX_ITERATIONS {
        q.fill(0.0);
        for (px, row) in p.iter().zip(ch.rows()) {
            for (qy, &w) in q.iter_mut().zip(row) {
                *qy += px * w;
            }
        }
        let mut i_upper = f64::NEG_INFINITY;
        i_lower = 0.0;
        for (dx, row) in d.iter_mut().zip(ch.rows()) {
            let mut div = 0.0;
            for (&w, &qy) in row.iter().zip(&q) {
                if w > 0.0 && qy > 0.0 {
                    div += w * (w / qy).log2();
                }
            }
            *dx = div;
            i_upper = i_upper.max(div);
        }
        for (&px, &dx) in p.iter().zip(&d) {
            i_lower += px * dx;
        }
        if i_upper - i_lower < tol {
            return Ok(i_lower.max(0.0));
        }
        // Multiplicative update p(x) <- p(x) 2^{D(x)} / normalizer, shifted
        // by the max divergence for stability.
        let mut norm = 0.0;
        for (px, &dx) in p.iter_mut().zip(&d) {
            *px *= (dx - i_upper).exp2();
            norm += *px;
        }
        for px in &mut p {
            *px /= norm;
        }
    }
    Err(Error::NonConverged {
        iterations: BA_MAX_ITERATIONS,
        last: i_lower,
    })
}

/// The rate available on the relay link: the stored value for an explicit
/// rate, otherwise the DMC capacity.
pub fn relay_link_capacity(spec: &RelayChannelSpec, tol: f64) -> Result<f64> {
    match spec.relay_link() {
        RelayLink::ExplicitRate(r) => Ok(*r),
        RelayLink::Dmc(ch) => dmc_capacity(ch, tol),
    }
}

/// Joint law p(z, y1) of the noise and the relay observation.
pub fn noise_observation_joint(spec: &RelayChannelSpec) -> Joint {
    let mut j = joint_from(spec.noise(), spec.relay_obs()).expect("validated spec dimensions");
    j = Joint::labeled(j.table().to_vec(), "z", "y1").expect("joint stays valid");
    j
}

// ---------------------------------------------------------------------------
// Spec documents
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    m: u64,
    noise: Vec<f64>,
    relay_obs: Vec<Vec<f64>>,
    relay_link: LinkDoc,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum LinkDoc {
    Rate { r0: f64 },
    Dmc { matrix: Vec<Vec<f64>> },
}

/// Parse a UTF-8 JSON channel spec document and validate it.
pub fn parse_spec(text: &str) -> Result<RelayChannelSpec> {
    let doc: SpecDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel spec: {e}")))?;
    let link = match doc.relay_link {
        LinkDoc::Rate { r0 } => RelayLink::ExplicitRate(r0),
        LinkDoc::Dmc { matrix } => RelayLink::Dmc(
            Channel::new(matrix)
                .map_err(|e| Error::Validation(format!("relay_link matrix: {e}")))?,
        ),
    };
    let noise = Pmf::new(doc.noise).map_err(|e| Error::Validation(format!("noise: {e}")))?;
    let relay_obs =
        Channel::new(doc.relay_obs).map_err(|e| Error::Validation(format!("relay_obs: {e}")))?;
    RelayChannelSpec::new(doc.m as usize, noise, relay_obs, link)
}

fn real17(x: f64) -> String {
    format!("{x:.16e}")
}

fn row17(row: &[f64]) -> String {
    let inner: Vec<String> = row.iter().map(|&x| real17(x)).collect();
    format!("[{}]", inner.join(","))
}

fn matrix17(rows: &[Vec<f64>]) -> String {
    let inner: Vec<String> = rows.iter().map(|r| row17(r)).collect();
    format!("[{}]", inner.join(","))
}

/// Canonical serialization: keys in fixed order, reals rendered with 17
/// significant digits, so parsing it back reproduces the spec bit-exactly
/// and re-serializing reproduces the bytes.
pub fn canonical_spec_json(spec: &RelayChannelSpec) -> String {
    let link = match spec.relay_link() {
        RelayLink::ExplicitRate(r) => format!("{{\"kind\":\"rate\",\"r0\":{}}}", real17(*r)),
        RelayLink::Dmc(ch) => format!("{{\"kind\":\"dmc\",\"matrix\":{}}}", matrix17(ch.rows())),
    };
    format!(
        "{{\"m\":{},\"noise\":{},\"relay_obs\":{},\"relay_link\":{}}}",
        spec.m(),
        row17(spec.noise().probs()),
        matrix17(spec.relay_obs().rows()),
        link
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bsc_relay_builds_the_binary_instance() {
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        assert_eq!(spec.m(), 2);
        assert_eq!(spec.noise().probs(), &[0.5, 0.5]);
        assert_eq!(spec.relay_obs(), &Channel::bsc(0.1).unwrap());
        assert_eq!(
            spec.relay_link(),
            &RelayLink::Dmc(Channel::bsc(0.11).unwrap())
        );

        // delta = 0: the relay observes Z exactly.
        let spec = bsc_relay(0.3, 0.0, 0.2).unwrap();
        assert_eq!(spec.relay_obs(), &Channel::identity(2).unwrap());

        // p = 0: noiseless direct channel.
        let spec = bsc_relay(0.0, 0.2, 0.2).unwrap();
        assert_eq!(spec.noise().probs(), &[1.0, 0.0]);

        assert!(bsc_relay(1.5, 0.1, 0.1).is_err());
    }

    #[test]
    fn link_capacity_bsc_reference_points() {
        let tol = 1e-12;
        let spec = bsc_relay(0.5, 0.1, 0.0).unwrap();
        assert!(close(relay_link_capacity(&spec, tol).unwrap(), 1.0, 1e-12));

        let spec = bsc_relay(0.5, 0.1, 0.5).unwrap();
        assert!(close(relay_link_capacity(&spec, tol).unwrap(), 0.0, 1e-12));

        // 1 - h(0.11) = 0.50008404183547200, frozen from the formula.
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        assert!(close(
            relay_link_capacity(&spec, tol).unwrap(),
            0.50008404183547200,
            1e-10
        ));
    }

    #[test]
    fn link_capacity_matches_closed_form_on_grid() {
        for i in 0..=10 {
            let eps = i as f64 * 0.05;
            let cap = dmc_capacity(&Channel::bsc(eps).unwrap(), 1e-12).unwrap();
            let want = 1.0 - binary_entropy(eps).unwrap();
            assert!(close(cap, want, 1e-9), "eps={eps}: {cap} vs {want}");
        }
    }

    #[test]
    fn link_capacity_invariant_under_relabeling() {
        // Asymmetric 2x3 channel; permute inputs and outputs.
        let ch = Channel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let permuted = Channel::new(vec![vec![0.6, 0.1, 0.3], vec![0.1, 0.7, 0.2]]).unwrap();
        let a = dmc_capacity(&ch, 1e-12).unwrap();
        let b = dmc_capacity(&permuted, 1e-12).unwrap();
        assert!(close(a, b, 1e-10), "{a} vs {b}");
    }

    #[test]
    fn explicit_rate_is_returned_as_is() {
        let spec = bsc_relay_with_rate(0.5, 0.1, 0.37).unwrap();
        assert_eq!(relay_link_capacity(&spec, 1e-12).unwrap(), 0.37);
        assert!(bsc_relay_with_rate(0.5, 0.1, -0.1).is_err());
        assert!(bsc_relay_with_rate(0.5, 0.1, f64::NAN).is_err());
    }

    #[test]
    fn noise_observation_joint_examples() {
        let spec = bsc_relay(0.5, 0.0, 0.1).unwrap();
        assert_eq!(
            noise_observation_joint(&spec).table(),
            &[vec![0.5, 0.0], vec![0.0, 0.5]]
        );

        // delta = 0.5: product of marginals.
        let spec = bsc_relay(0.3, 0.5, 0.1).unwrap();
        let j = noise_observation_joint(&spec);
        for (z, row) in j.table().iter().enumerate() {
            for &x in row {
                assert!(close(x, spec.noise().probs()[z] * 0.5, 1e-15));
            }
        }

        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        let j = noise_observation_joint(&spec);
        assert!(close(j.table()[0][0], 0.45, 1e-15));
        assert!(close(j.table()[0][1], 0.05, 1e-15));
        assert!(close(j.table()[1][0], 0.05, 1e-15));
        assert!(close(j.table()[1][1], 0.45, 1e-15));

        // Marginals: rows give the noise law, columns noise * relay_obs.
        let m = j.row_marginal();
        assert!(close(m.probs()[0], 0.5, 1e-15));
    }

    #[test]
    fn parse_canonical_round_trip() {
        let spec = bsc_relay(0.5, 0.1, 0.11).unwrap();
        let text = canonical_spec_json(&spec);
        let parsed = parse_spec(&text).unwrap();
        assert_eq!(parsed, spec);
        assert_eq!(canonical_spec_json(&parsed), text);

        let spec = bsc_relay_with_rate(0.3, 0.25, 0.6).unwrap();
        let text = canonical_spec_json(&spec);
        assert_eq!(parse_spec(&text).unwrap(), spec);
    }

    #[test]
    fn parse_accepts_the_documented_example() {
        let text = r#"{
            "m": 2,
            "noise": [0.5, 0.5],
            "relay_obs": [[0.9, 0.1], [0.1, 0.9]],
            "relay_link": {"kind": "dmc", "matrix": [[0.89, 0.11], [0.11, 0.89]]}
        }"#;
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec, bsc_relay(0.5, 0.1, 0.11).unwrap());
    }

    #[test]
    fn parse_ternary_with_wider_observation() {
        let text = r#"{
            "m": 3,
            "noise": [0.3333333333333333, 0.3333333333333334, 0.3333333333333333],
            "relay_obs": [
                [0.7, 0.1, 0.1, 0.1],
                [0.1, 0.7, 0.1, 0.1],
                [0.1, 0.1, 0.7, 0.1]
            ],
            "relay_link": {"kind": "rate", "r0": 0.5}
        }"#;
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.m(), 3);
        assert_eq!(spec.y1_size(), 4);
    }

    #[test]
    fn parse_reports_bad_rows_and_locations() {
        let text = r#"{
            "m": 2,
            "noise": [0.5, 0.5],
            "relay_obs": [[0.8, 0.1], [0.1, 0.9]],
            "relay_link": {"kind": "rate", "r0": 1.0}
        }"#;
        let err = parse_spec(text).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("relay_obs"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }

        let err = parse_spec("{\"m\": 2,").unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
