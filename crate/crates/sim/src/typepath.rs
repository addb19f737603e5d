//! Type-count paths of single-site Moran models.
//!
//! For functionals of the type frequencies only the counts matter, and the
//! count process is itself a Markov chain: a type-`v` individual becomes
//! type `u` by replacement at rate `n_u n_v d / 2` (plus
//! `n_u n_v alpha chi(u) / N` under selection) and by mutation at rate
//! `theta n_v beta(v, u)`. Simulating the counts directly skips the events
//! that do not change them.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::events::Event;
use crate::kernel::StochasticMatrix;
use crate::moran::{MoranConfig, MoranInitial};
use crate::population::assign;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    /// Replacement by an offspring, neutral or selective.
    Replace,
    Mutate,
}

/// One individual changes type from `from` to `to` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeJump {
    pub t: f64,
    pub from: u32,
    pub to: u32,
    pub kind: JumpKind,
}

/// Piecewise-constant type counts on `[0, end]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypePath {
    pub n: usize,
    pub resampling_rate: f64,
    pub mutation_rate: f64,
    pub mutation_kernel: StochasticMatrix,
    pub selection: f64,
    pub initial_counts: Vec<usize>,
    pub jumps: Vec<TypeJump>,
    pub end: f64,
}

impl TypePath {
    pub fn types(&self) -> usize {
        self.initial_counts.len()
    }

    /// Counts at the end of the path.
    pub fn final_counts(&self) -> Vec<usize> {
        let mut c = self.initial_counts.clone();
        for j in &self.jumps {
            c[j.from as usize] -= 1;
            c[j.to as usize] += 1;
        }
        c
    }

    pub fn final_frequency(&self, genotype: u32) -> f64 {
        self.final_counts()[genotype as usize] as f64 / self.n as f64
    }

    /// Projects a single-site Moran event log onto type counts. Events
    /// that leave the counts unchanged are dropped.
    pub fn from_events(log: &[Event]) -> Result<Self> {
        let Some(Event::Start {
            n,
            resampling_rate,
            mutation_rate,
            mutation_kernel,
            selection,
            types,
            locations,
            marks,
        }) = log.first()
        else {
            return Err(SimError::Parse(
                "event log must begin with a start record".into(),
            ));
        };
        if *locations != 1 {
            return Err(SimError::InvalidConfig(
                "type paths need a single site".into(),
            ));
        }
        let mut genotypes: Vec<u32> = marks.iter().map(|m| m.genotype).collect();
        let mut initial_counts = vec![0usize; *types];
        for &g in &genotypes {
            initial_counts[g as usize] += 1;
        }
        let mut jumps = Vec::new();
        let mut end = None;
        let mut last = 0.0;
        for e in &log[1..] {
            let (t, jump) = match *e {
                Event::Resample { t, parent, child } | Event::Select { t, parent, child } => {
                    let (from, to) = (genotypes[child], genotypes[parent]);
                    genotypes[child] = to;
                    (t, (from != to).then_some((from, to, JumpKind::Replace)))
                }
                Event::Mutate {
                    t,
                    individual,
                    from,
                    to,
                } => {
                    if genotypes[individual] != from {
                        return Err(SimError::Parse(format!(
                            "mutation at {t} does not match the recorded type"
                        )));
                    }
                    genotypes[individual] = to;
                    (t, (from != to).then_some((from, to, JumpKind::Mutate)))
                }
                Event::Migrate { .. } => {
                    return Err(SimError::InvalidConfig(
                        "type paths need a single site".into(),
                    ));
                }
                Event::End { t } => {
                    end = Some(t);
                    break;
                }
                Event::Start { .. } => return Err(SimError::Parse("repeated start record".into())),
            };
            if t < last {
                return Err(SimError::Parse(format!("event times decrease at {t}")));
            }
            last = t;
            if let Some((from, to, kind)) = jump {
                jumps.push(TypeJump { t, from, to, kind });
            }
        }
        let end = end.ok_or_else(|| SimError::Parse("event log has no end record".into()))?;
        Ok(TypePath {
            n: *n,
            resampling_rate: *resampling_rate,
            mutation_rate: *mutation_rate,
            mutation_kernel: mutation_kernel.clone(),
            selection: *selection,
            initial_counts,
            jumps,
            end,
        })
    }
}

/// Simulates the type counts of a single-site Moran model on
/// `[0, horizon]`. The initial counts follow the configured assignment,
/// exactly as in [`crate::moran::moran_run`].
pub fn type_count_run<R: Rng + ?Sized>(
    cfg: &MoranConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<TypePath> {
    cfg.validate()?;
    if cfg.locations() != 1 {
        return Err(SimError::InvalidConfig(
            "type-count simulation needs a single site".into(),
        ));
    }
    let k = cfg.types();
    let mut counts = vec![0usize; k];
    match &cfg.initial {
        MoranInitial::Space { space, assignment } => {
            for leaf in assign(space, cfg.n, *assignment, rng)? {
                counts[space.mark(leaf).genotype as usize] += 1;
            }
        }
        MoranInitial::Individuals(marks) => {
            for m in marks {
                counts[m.genotype as usize] += 1;
            }
        }
    }
    let initial_counts = counts.clone();
    let n = cfg.n as f64;
    let d = cfg.resampling_rate;
    let theta = cfg.mutation_rate;
    // Per ordered type pair (to, from): replacement and mutation rates.
    let replace: Vec<f64> = (0..k)
        .map(|u| d / 2.0 + cfg.selection * cfg.fitness_of(u as u32) / n)
        .collect();
    let mut rates = vec![0.0; 2 * k * k];
    let mut jumps = Vec::new();
    let mut time = 0.0;
    loop {
        let mut total = 0.0;
        for to in 0..k {
            for from in 0..k {
                let (r, m) = if to == from || counts[from] == 0 {
                    (0.0, 0.0)
                } else {
                    (
                        replace[to] * (counts[to] * counts[from]) as f64,
                        theta * counts[from] as f64 * cfg.mutation_kernel.get(from, to),
                    )
                };
                rates[2 * (to * k + from)] = r;
                rates[2 * (to * k + from) + 1] = m;
                total += r + m;
            }
        }
        if !(total > 0.0) {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        time += e / total;
        if time > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = rates
            .iter()
            .rposition(|r| *r > 0.0)
            .expect("positive total");
        for (c, r) in rates.iter().enumerate() {
            if u < *r {
                pick = c;
                break;
            }
            u -= r;
        }
        let (to, from) = ((pick / 2) / k, (pick / 2) % k);
        counts[from] -= 1;
        counts[to] += 1;
        jumps.push(TypeJump {
            t: time,
            from: from as u32,
            to: to as u32,
            kind: if pick % 2 == 0 {
                JumpKind::Replace
            } else {
                JumpKind::Mutate
            },
        });
    }
    Ok(TypePath {
        n: cfg.n,
        resampling_rate: d,
        mutation_rate: theta,
        mutation_kernel: cfg.mutation_kernel.clone(),
        selection: cfg.selection,
        initial_counts,
        jumps,
        end: horizon,
    })
}
