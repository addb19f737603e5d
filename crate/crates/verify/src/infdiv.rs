//! Poisson concatenation and the Lévy-Khintchine identity at level `h`.
//!
//! A finite atomic Lévy measure puts intensity `c_i` on a space `u_i` of
//! height at most `2h`. The random space
//! `U(h) = ⊔^h over i of N_i copies of u_i`, with independent
//! `N_i ~ Poisson(c_i)`, satisfies
//! `-log E exp(-Phi(U(h))) = sum_i c_i (1 - exp(-Phi(u_i)))` whenever
//! `exp(-Phi)` factorizes over components.

use genealab_core::stats::ks_two_sample;
use genealab_core::{
    canonical_hash, concatenate, diameter, evaluate_polynomial, from_json, to_json, truncate,
    EvalOptions, LeafSampler, PolynomialSpec, Space,
};
use genealab_sim::rng::domain;
use genealab_sim::stream;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VerifyError};
use crate::harness::replicate;
use crate::random::random_component;
use crate::report::{Check, Estimate, Outcome, Report, Series, Tolerance};

/// One atom of the Lévy measure.
#[derive(Clone, Debug)]
pub struct LevyAtom {
    pub intensity: f64,
    pub space: Space,
}

#[derive(Clone, Debug)]
pub struct LevyMeasureSpec {
    level: f64,
    atoms: Vec<LevyAtom>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomJson {
    intensity: f64,
    space: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    level: f64,
    atoms: Vec<AtomJson>,
}

impl LevyMeasureSpec {
    pub fn new(level: f64, atoms: Vec<LevyAtom>) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(VerifyError::InvalidConfig(format!(
                "level h = {level} must be positive"
            )));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.intensity >= 0.0 && a.intensity.is_finite()) {
                return Err(VerifyError::InvalidConfig(format!(
                    "atom {i}: intensity {} must be finite and >= 0",
                    a.intensity
                )));
            }
            let diam = diameter(&a.space);
            if diam > 2.0 * level {
                return Err(VerifyError::InvalidConfig(format!(
                    "atom {i}: diameter {diam} exceeds 2h = {}",
                    2.0 * level
                )));
            }
        }
        Ok(LevyMeasureSpec { level, atoms })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn atoms(&self) -> &[LevyAtom] {
        &self.atoms
    }

    pub fn total_intensity(&self) -> f64 {
        self.atoms.iter().map(|a| a.intensity).sum()
    }

    /// `E[mass(U(h))] = sum_i c_i mass(u_i)`.
    pub fn mean_mass(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.intensity * a.space.total_mass())
            .sum()
    }

    /// Every intensity divided by `parts`.
    pub fn thinned(&self, parts: usize) -> Result<Self> {
        if parts == 0 {
            return Err(VerifyError::InvalidConfig(
                "thinning needs at least one part".into(),
            ));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| LevyAtom {
                intensity: a.intensity / parts as f64,
                space: a.space.clone(),
            })
            .collect();
        Self::new(self.level, atoms)
    }

    /// The spec at level `h' <= h` with atoms `T_h'(u_i)`.
    pub fn truncated(&self, level: f64) -> Result<Self> {
        if !(level > 0.0 && level <= self.level) {
            return Err(VerifyError::InvalidConfig(format!(
                "truncation level {level} must lie in (0, {}]",
                self.level
            )));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(LevyAtom {
                    intensity: a.intensity,
                    space: truncate(&a.space, level)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(level, atoms)
    }

    /// `{"level": h, "atoms": [{"intensity": c, "space": <space document>}]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecJson = serde_json::from_str(text)
            .map_err(|e| VerifyError::InvalidConfig(format!("Lévy spec: {e}")))?;
        let atoms = doc
            .atoms
            .into_iter()
            .map(|a| {
                Ok(LevyAtom {
                    intensity: a.intensity,
                    space: from_json(&a.space.to_string())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.level, atoms)
    }

    pub fn to_json(&self) -> String {
        let doc = SpecJson {
            level: self.level,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    intensity: a.intensity,
                    space: serde_json::from_str(&to_json(&a.space))
                        .expect("space documents are JSON"),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("spec serializes")
    }
}

/// Poisson counts per atom.
pub fn poisson_counts<R: Rng + ?Sized>(spec: &LevyMeasureSpec, rng: &mut R) -> Vec<usize> {
    spec.atoms
        .iter()
        .map(|a| {
            if a.intensity > 0.0 {
                Poisson::new(a.intensity)
                    .expect("positive intensity")
                    .sample(rng) as usize
            } else {
                0
            }
        })
        .collect()
}

/// Concatenates `counts[i]` copies of every atom at the spec's level.
pub fn concatenate_counts(spec: &LevyMeasureSpec, counts: &[usize]) -> Result<Space> {
    let parts: Vec<&Space> = spec
        .atoms
        .iter()
        .zip(counts)
        .flat_map(|(a, &k)| std::iter::repeat_n(&a.space, k))
        .collect();
    Ok(concatenate(&parts, spec.level)?)
}

/// One draw of `U(h)`. An empty draw is the zero space.
pub fn poisson_concatenate<R: Rng + ?Sized>(spec: &LevyMeasureSpec, rng: &mut R) -> Result<Space> {
    let counts = poisson_counts(spec, rng);
    concatenate_counts(spec, &counts)
}

/// Rejects order >= 2 polynomials that do not vanish when the sample
/// splits into two groups at distance `2h`.
pub fn check_boundary_vanishing(poly: &PolynomialSpec<f64>, level: f64) -> Result<()> {
    let n = poly.order();
    if n < 2 {
        return Ok(());
    }
    let boundary = 2.0 * level;
    let masks = (1u64 << (n - 1).min(12)).min(1 << 12);
    for mask in 1..masks {
        // Point 0 is in the first group; bit k - 1 puts point k in the second.
        let group = |k: usize| k > 0 && (mask >> (k - 1)) & 1 == 1;
        for within in [0.0, level] {
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        d[i * n + j] = if group(i) == group(j) {
                            within
                        } else {
                            boundary
                        };
                    }
                }
            }
            let v = poly.integrand(&mut d, None)?;
            if v != 0.0 {
                return Err(VerifyError::KernelNotBoundaryVanishing { boundary });
            }
        }
    }
    Ok(())
}

fn prepared(poly: &PolynomialSpec<f64>, level: f64) -> Result<PolynomialSpec<f64>> {
    if poly.needs_marks() {
        return Err(VerifyError::InvalidConfig(
            "Lévy specs carry unmarked spaces".into(),
        ));
    }
    let poly = match poly.truncation() {
        None => poly.clone().truncated(level),
        Some(h) if h == level => poly.clone(),
        Some(h) => {
            return Err(VerifyError::InvalidConfig(format!(
                "polynomial truncated at {h}, spec level is {level}"
            )))
        }
    };
    check_boundary_vanishing(&poly, level)?;
    Ok(poly)
}

fn raw_value(space: &Space, poly: &PolynomialSpec<f64>) -> Result<f64> {
    let mut unused = stream(0, domain::TEST, 0);
    Ok(evaluate_polynomial(space, poly, &EvalOptions::exact().raw(), &mut unused)?.value)
}

/// `sum_i c_i (1 - exp(-Phi(u_i)))`.
pub fn levy_khintchine_sum(spec: &LevyMeasureSpec, poly: &PolynomialSpec<f64>) -> Result<f64> {
    let poly = prepared(poly, spec.level)?;
    let mut s = 0.0;
    for a in &spec.atoms {
        s += a.intensity * -(-raw_value(&a.space, &poly)?).exp_m1();
    }
    Ok(s)
}

/// Monte Carlo `-log E exp(-Phi(U(h)))` (delta-method standard error)
/// against the exact Lévy-Khintchine sum. `Phi` integrates against the
/// unnormalized measure.
pub fn laplace_check(
    spec: &LevyMeasureSpec,
    poly: &PolynomialSpec<f64>,
    reps: usize,
    tolerance: Tolerance,
    seed: u64,
) -> Result<Outcome> {
    let poly = prepared(poly, spec.level)?;
    let exact = levy_khintchine_sum(spec, &poly)?;
    let values = replicate(reps, |r| {
        let u = poisson_concatenate(spec, &mut stream(seed, domain::POISSON, r))?;
        Ok((-raw_value(&u, &poly)?).exp())
    })?;
    let e = Estimate::from_values(&values);
    let left = Estimate {
        mean: -e.mean.ln(),
        std_error: e.std_error / e.mean,
        replicates: e.replicates,
    };
    let check = Check::target(
        "-log E exp(-Phi) vs Levy-Khintchine sum",
        left,
        exact,
        tolerance,
    );
    Ok(Outcome::new(
        Report::new("infdiv-check", seed, vec![check]),
        vec![Series::new("laplace", values)],
    ))
}

/// Distance between two independent leaves drawn from the normalized
/// measure, `None` for the zero space.
fn pair_distance<R: Rng + ?Sized>(space: &Space, rng: &mut R) -> Result<Option<f64>> {
    if !(space.total_mass() > 0.0) {
        return Ok(None);
    }
    let sampler = LeafSampler::new(space)?;
    let (a, b) = (sampler.sample(rng), sampler.sample(rng));
    Ok(Some(space.distance(a, b)))
}

struct Draw {
    mass: f64,
    distance: Option<f64>,
}

fn summarize<R: Rng + ?Sized>(space: &Space, rng: &mut R) -> Result<Draw> {
    Ok(Draw {
        mass: space.total_mass(),
        distance: pair_distance(space, rng)?,
    })
}

fn ks_check<R: Rng + ?Sized>(name: &str, a: &[f64], b: &[f64], level: f64, rng: &mut R) -> Check {
    if a.is_empty() || b.is_empty() {
        return Check::distribution(name, "ks", 1.0, 0.0, level);
    }
    let t = ks_two_sample(a, b, rng);
    Check::distribution(name, "ks", t.statistic, t.p_value, level)
}

/// Total-mass and pair-distance comparisons of two samplers.
fn compare_draws(
    experiment: &str,
    a: &[Draw],
    b: &[Draw],
    zero_law: bool,
    level: f64,
    seed: u64,
) -> (Report, Vec<Series>) {
    let mass_a: Vec<f64> = a.iter().map(|d| d.mass).collect();
    let mass_b: Vec<f64> = b.iter().map(|d| d.mass).collect();
    let dist_a: Vec<f64> = a.iter().filter_map(|d| d.distance).collect();
    let dist_b: Vec<f64> = b.iter().filter_map(|d| d.distance).collect();
    let mut checks = Vec::new();
    if zero_law {
        checks.push(Check::count(
            "nonzero outcomes of the zero law",
            dist_a.len() + dist_b.len(),
            0,
            a.len() + b.len(),
        ));
    } else {
        let mut rng = stream(seed, domain::TEST, 0);
        checks.push(ks_check("total mass", &mass_a, &mass_b, level, &mut rng));
        checks.push(ks_check(
            "pair distance on nonzero outcomes",
            &dist_a,
            &dist_b,
            level,
            &mut rng,
        ));
    }
    let series = vec![
        Series::new("mass_direct", mass_a),
        Series::new("mass_other", mass_b),
    ];
    (Report::new(experiment, seed, checks), series)
}

/// Direct draws of `U(h)` against the concatenation of `parts` independent
/// draws from the spec thinned by `1 / parts`.
pub fn split_check(
    spec: &LevyMeasureSpec,
    parts: usize,
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<Outcome> {
    let thin = spec.thinned(parts)?;
    let direct = replicate(reps, |r| {
        let mut rng = stream(seed, domain::POISSON, r);
        let u = poisson_concatenate(spec, &mut rng)?;
        summarize(&u, &mut rng)
    })?;
    let split = replicate(reps, |r| {
        let mut rng = stream(seed, domain::SAMPLE, r);
        let pieces = (0..parts)
            .map(|_| poisson_concatenate(&thin, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Space> = pieces.iter().collect();
        let u = concatenate(&refs, spec.level)?;
        summarize(&u, &mut rng)
    })?;
    let (report, series) = compare_draws(
        "infdiv-split",
        &direct,
        &split,
        spec.total_intensity() == 0.0,
        level,
        seed,
    );
    Ok(Outcome::new(
        report.with_note(format!("parts = {parts}")),
        series,
    ))
}

/// `T_h'(U(h))` against `U(h')` drawn from the spec with atoms `T_h'(u_i)`.
pub fn truncation_check(
    spec: &LevyMeasureSpec,
    lower: f64,
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<Outcome> {
    let low = spec.truncated(lower)?;
    let direct = replicate(reps, |r| {
        let mut rng = stream(seed, domain::POISSON, r);
        let u = truncate(&poisson_concatenate(spec, &mut rng)?, lower)?;
        summarize(&u, &mut rng)
    })?;
    let other = replicate(reps, |r| {
        let mut rng = stream(seed, domain::SAMPLE, r);
        let u = poisson_concatenate(&low, &mut rng)?;
        summarize(&u, &mut rng)
    })?;
    let (report, series) = compare_draws(
        "infdiv-truncation",
        &direct,
        &other,
        spec.total_intensity() == 0.0,
        level,
        seed,
    );
    Ok(Outcome::new(
        report.with_note(format!("h' = {lower}")),
        series,
    ))
}

/// A random instance: zero, a random component, or a Poisson
/// concatenation of random components.
fn random_instance<R: Rng + ?Sized>(h: f64, max_leaves: usize, rng: &mut R) -> Result<Space> {
    match rng.random_range(0..10) {
        0 => Ok(Space::zero()),
        1..=5 => Ok(random_component(h, max_leaves, rng)),
        _ => {
            let atoms = (0..rng.random_range(1..4))
                .map(|_| LevyAtom {
                    intensity: rng.random_range(0.2..2.0),
                    space: random_component(h, max_leaves, rng),
                })
                .collect();
            poisson_concatenate(&LevyMeasureSpec::new(h, atoms)?, rng)
        }
    }
}

/// Associativity, commutativity, identity and truncation consistency of
/// `⊔^h`, decided by canonical hash, plus the height bound, on `instances`
/// random triples.
pub fn semigroup_laws(instances: usize, h: f64, max_leaves: usize, seed: u64) -> Result<Report> {
    let zero = Space::zero();
    let outcomes = replicate(instances, |i| {
        let mut rng = stream(seed, domain::TEST, i);
        let u = random_instance(h, max_leaves, &mut rng)?;
        let v = random_instance(h, max_leaves, &mut rng)?;
        let w = random_instance(h, max_leaves, &mut rng)?;
        let lower = h * rng.random_range(1..=4) as f64 / 4.0;
        let c = |parts: &[&Space]| concatenate(parts, h);
        let same = |a: &Space, b: &Space| canonical_hash(a) == canonical_hash(b);
        let uv = c(&[&u, &v])?;
        let vw = c(&[&v, &w])?;
        let flat = c(&[&u, &v, &w])?;
        let left = c(&[&uv, &w])?;
        let right = c(&[&u, &vw])?;
        let assoc = same(&left, &right) && same(&left, &flat);
        let comm = same(&uv, &c(&[&v, &u])?);
        let ident = same(&c(&[&u, &zero])?, &u) && same(&c(&[&zero, &u])?, &u);
        let tu = truncate(&u, lower)?;
        let tv = truncate(&v, lower)?;
        let trunc = same(&truncate(&uv, lower)?, &concatenate(&[&tu, &tv], lower)?);
        let bounded = [&u, &v, &w, &flat].iter().all(|s| diameter(*s) <= 2.0 * h);
        Ok([assoc, comm, ident, trunc, bounded])
    })?;
    let failures = |k: usize| outcomes.iter().filter(|o| !o[k]).count();
    let names = [
        "associativity",
        "commutativity",
        "identity",
        "truncation consistency",
        "height at most 2h",
    ];
    let checks = names
        .iter()
        .enumerate()
        .map(|(k, name)| Check::count(format!("{name} failures"), failures(k), 0, instances))
        .collect();
    Ok(Report::new("infdiv-semigroup", seed, checks))
}
