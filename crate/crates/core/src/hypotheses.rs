//! Sampled checks of the structural hypotheses on a stored-energy density:
//! frame indifference (H1), vanishing on SO(2) (H2), coercivity against the
//! squared distance to SO(2) (H3) and smoothness near the identity (H4),
//! plus the properties of the linearization `𝓛` and the modulus `E`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{energy_gradient_fd, linearize, taylor_remainder, StoredEnergy};
use crate::tensor::{dist_so2, rotation_matrix, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Failed, but the density documents this hypothesis as violated.
    ExpectedFailure,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::ExpectedFailure => "xfail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    /// `H1`…`H4`, or `L` for properties of the linearization.
    pub tag: &'static str,
    pub name: &'static str,
    pub status: CheckStatus,
    pub measured: f64,
    pub threshold: f64,
}

impl HypothesisCheck {
    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 2024,
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, spread: f64) -> Mat2 {
    Mat2::new(
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
    )
}

fn random_with_det_above(rng: &mut ChaCha8Rng, min_det: f64) -> Mat2 {
    loop {
        let f = rotation_matrix(rng.gen_range(-3.2..3.2)) * (Mat2::IDENTITY + random_matrix(rng, 0.7));
        if f.det() > min_det {
            return f;
        }
    }
}

/// Runs every check; `exceptions` lists the tags whose failure is expected.
pub fn run_suite(
    w: &dyn StoredEnergy,
    exceptions: &[&str],
    opts: SuiteOptions,
) -> Vec<HypothesisCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = opts.samples.max(1);
    let mut out = Vec::new();
    let mut push = |tag: &'static str, name: &'static str, ok: bool, measured: f64, threshold: f64| {
        let status = if ok {
            CheckStatus::Pass
        } else if exceptions.contains(&tag) {
            CheckStatus::ExpectedFailure
        } else {
            CheckStatus::Fail
        };
        out.push(HypothesisCheck {
            tag,
            name,
            status,
            measured,
            threshold,
        });
    };

    // H1: W(RF) = W(F), relative to max(1, W).
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let f = random_matrix(&mut rng, 2.0);
        let r = rotation_matrix(rng.gen_range(-3.2..3.2));
        let base = w.energy(&f);
        let rotated = w.energy(&(r * f));
        worst = worst.max((rotated - base).abs() / base.abs().max(1.0));
    }
    push("H1", "frame indifference", worst <= 1e-12, worst, 1e-12);

    // H2: W = 0 on SO(2).
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let r = rotation_matrix(rng.gen_range(-3.2..3.2));
        worst = worst.max(w.energy(&r).abs());
    }
    push("H2", "vanishes on SO(2)", worst <= 1e-12, worst, 1e-12);

    // H3: inf W/dist² over samples of both determinant signs, plus the
    // reflection diag(1,−1) as an explicit probe.
    let mut c_min = f64::INFINITY;
    let mut probe = |f: Mat2| {
        let d = dist_so2(&f);
        if d > 1e-3 {
            c_min = c_min.min(w.energy(&f) / (d * d));
        }
    };
    probe(Mat2::diag(1.0, -1.0));
    probe(Mat2::diag(-1.0, 1.0) * rotation_matrix(0.4));
    for _ in 0..n {
        probe(random_matrix(&mut rng, 2.0));
    }
    push("H3", "coercivity W >= c dist^2", c_min > 1e-8, c_min, 1e-8);

    // H4: DW against central differences where det F > 1/4.
    let mut worst = 0.0_f64;
    let mut domain_errors = 0usize;
    for _ in 0..n {
        let f = random_with_det_above(&mut rng, 0.25);
        match w.stress(&f) {
            Ok(s) => {
                let fd = energy_gradient_fd(w, &f, 1e-5);
                worst = worst.max((s - fd).norm() / (s.norm() + 1e-3));
            }
            Err(_) => domain_errors += 1,
        }
    }
    let ok = domain_errors == 0 && worst <= 1e-6;
    push("H4", "DW matches finite differences", ok, worst, 1e-6);

    // H4: D²W against central differences of DW.
    let mut worst = 0.0_f64;
    let mut failed = false;
    for _ in 0..n.min(200) {
        let f = random_with_det_above(&mut rng, 0.25);
        let dir = random_matrix(&mut rng, 1.0);
        let step = 1e-6;
        let res = (|| -> crate::Result<f64> {
            let exact = w.stress_derivative(&f, &dir)?;
            let fd = (w.stress(&(f + dir * step))? - w.stress(&(f - dir * step))?) * (0.5 / step);
            Ok((exact - fd).norm() / (exact.norm() + 1e-3))
        })();
        match res {
            Ok(e) => worst = worst.max(e),
            Err(_) => failed = true,
        }
    }
    push("H4", "D2W matches finite differences", !failed && worst <= 1e-6, worst, 1e-6);

    // H4 / linearization: remainder η(tA)/|tA| → 0.
    let lin = linearize(w);
    match &lin {
        Ok(lin) => {
            let mut worst = 0.0_f64;
            let mut monotone = true;
            for _ in 0..20 {
                let a = random_matrix(&mut rng, 1.0);
                let a = a * (1.0 / a.norm());
                let mut prev = f64::INFINITY;
                for t in [1e-2, 1e-4, 1e-6] {
                    let ratio = taylor_remainder(w, lin, &(a * t))
                        .map(|eta| eta.norm() / t)
                        .unwrap_or(f64::INFINITY);
                    if ratio > prev && ratio > 1e-9 {
                        monotone = false;
                    }
                    prev = ratio;
                }
                worst = worst.max(prev);
            }
            push("H4", "Taylor remainder vanishes at Id", monotone && worst <= 1e-4, worst, 1e-4);

            let mut worst_sym = 0.0_f64;
            let mut worst_sympart = 0.0_f64;
            for _ in 0..n {
                let a = random_matrix(&mut rng, 1.0);
                let b = random_matrix(&mut rng, 1.0);
                let lab = lin.apply(&a).ddot(&b);
                let alb = a.ddot(&lin.apply(&b));
                worst_sym = worst_sym.max((lab - alb).abs() / (1.0 + lab.abs()));
                let la = lin.apply(&a);
                worst_sympart = worst_sympart
                    .max((la - lin.apply(&a.sym())).max_abs())
                    .max((la - la.transpose()).max_abs());
            }
            push("L", "L is self-adjoint", worst_sym <= 1e-12, worst_sym, 1e-12);
            push("L", "L F = L sym F and is symmetric", worst_sympart <= 1e-12, worst_sympart, 1e-12);
            let c = lin.coercivity();
            push("L", "L positive on symmetric matrices", c > 0.0, c, 0.0);
            push("L", "modulus E", lin.modulus > 0.0, lin.modulus, 0.0);
        }
        Err(_) => {
            push("L", "linearization exists", false, f64::NAN, 0.0);
        }
    }
    out
}
