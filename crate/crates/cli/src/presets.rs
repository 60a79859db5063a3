//! Initial-state presets.

use std::path::PathBuf;

use envara_core::energetics::{equilibrium_conserved, equilibrium_extinct};
use envara_core::error::{Error, Result};
use envara_core::grid_ops::{self, CosineTransform, Field};
use envara_core::models::{Model, ModelKind};

/// splitmix64 stream: the named, seedable generator behind the randomized
/// presets (documented in the README so runs can be reproduced elsewhere).
struct SplitMix64(u64);

impl SplitMix64 {
    fn seed_from_u64(seed: u64) -> Self {
        SplitMix64(seed)
    }

    /// Next draw in [0, 1).
    fn next_unit(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Parsed initial preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Equilibrium,
    Extinct,
    Perturbed { amplitude: f64, mode: u32 },
    Random { amplitude: f64 },
    File(PathBuf),
}

/// Parses `equilibrium | extinct | equilibrium-perturbed:AMP:MODE |
/// random:AMP | file:DIR`.
pub fn parse_preset(text: &str) -> std::result::Result<Preset, String> {
    if text == "equilibrium" {
        return Ok(Preset::Equilibrium);
    }
    if text == "extinct" {
        return Ok(Preset::Extinct);
    }
    if let Some(rest) = text.strip_prefix("equilibrium-perturbed:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(format!("preset '{text}': expected equilibrium-perturbed:AMP:MODE"));
        }
        let amplitude: f64 = parts[0]
            .parse()
            .map_err(|_| format!("preset '{text}': bad amplitude '{}'", parts[0]))?;
        let mode: u32 = parts[1]
            .parse()
            .map_err(|_| format!("preset '{text}': bad mode '{}'", parts[1]))?;
        if !(amplitude.abs() < 1.0) {
            return Err(format!("preset '{text}': |amplitude| must be < 1"));
        }
        return Ok(Preset::Perturbed { amplitude, mode });
    }
    if let Some(rest) = text.strip_prefix("random:") {
        let amplitude: f64 = rest
            .parse()
            .map_err(|_| format!("preset '{text}': bad amplitude '{rest}'"))?;
        if !(amplitude >= 0.0 && amplitude < 1.0) {
            return Err(format!("preset '{text}': amplitude must lie in [0, 1)"));
        }
        return Ok(Preset::Random { amplitude });
    }
    if let Some(rest) = text.strip_prefix("file:") {
        return Ok(Preset::File(PathBuf::from(rest)));
    }
    Err(format!("unknown initial preset '{text}'"))
}

/// Homogeneous base levels of the preset: closed-form equilibria for the
/// closed/rescaled kinds, a damped Newton solve of the homogeneous kinetics
/// otherwise.
pub fn base_levels(model: &Model) -> Result<Vec<f64>> {
    match model.kind() {
        ModelKind::ClosedSix | ModelKind::RescaledOpen => {
            Ok(equilibrium_conserved(model.params(), model.params().m0)?.values().to_vec())
        }
        _ => homogeneous_equilibrium(model),
    }
}

fn eval_homogeneous(model: &Model, c: &[f64]) -> Result<Vec<f64>> {
    let grid = model.grid();
    let fields: Vec<Field> = c.iter().map(|&v| Field::constant(grid, v)).collect();
    let rhs = model.reaction_terms(&fields)?;
    Ok(rhs.iter().map(|f| f.values()[0]).collect())
}

/// Damped Newton with finite-difference Jacobian on the homogeneous
/// kinetics; random positive restarts, interior roots only.
fn homogeneous_equilibrium(model: &Model) -> Result<Vec<f64>> {
    let ns = model.n_species();
    let mut rng = SplitMix64::seed_from_u64(42);
    for restart in 0..30 {
        let mut c: Vec<f64> = if restart == 0 {
            vec![1.0; ns]
        } else {
            (0..ns).map(|_| 0.1 + 2.0 * rng.next_unit()).collect()
        };
        let scale = {
            let g0 = eval_homogeneous(model, &c)?;
            g0.iter().map(|v| v.abs()).fold(1.0f64, f64::max)
        };
        let mut converged = false;
        for _ in 0..200 {
            let g = eval_homogeneous(model, &c)?;
            if g.iter().map(|v| v.abs()).fold(0.0f64, f64::max) < 1e-11 * scale {
                converged = true;
                break;
            }
            let mut jac = vec![0.0; ns * ns];
            for j in 0..ns {
                let h = 1e-7 * c[j].abs().max(1e-3);
                let mut cp = c.clone();
                cp[j] += h;
                let gp = eval_homogeneous(model, &cp)?;
                for i in 0..ns {
                    jac[i * ns + j] = (gp[i] - g[i]) / h;
                }
            }
            let mut step = g.clone();
            if !solve_dense(&mut jac, &mut step, ns) {
                break;
            }
            for (ci, s) in c.iter_mut().zip(&step) {
                let trial = *ci - s;
                *ci = if trial > 0.1 * *ci { trial } else { 0.1 * *ci };
            }
        }
        if converged && c.iter().all(|&v| v > 1e-8) {
            return Ok(c);
        }
    }
    Err(Error::invalid(
        "no positive homogeneous equilibrium found for this model; \
         use a file preset or different parameters",
    ))
}

/// Gaussian elimination with partial pivoting; false on (near-)singularity.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return false;
        }
        for j in 0..n {
            a.swap(col * n + j, piv * n + j);
        }
        b.swap(col, piv);
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        b[col] /= a[col * n + col];
        for r in 0..col {
            b[r] -= a[r * n + col] * b[col];
        }
    }
    true
}

/// Builds the initial fields of a preset. Randomized presets draw from a
/// splitmix64 stream keyed on `(seed, species index)`; on the closed and
/// rescaled kinds the random preset is rescaled to total mass `m0 |Omega|`.
pub fn build_initial(model: &Model, preset: &Preset, seed: u64) -> Result<Vec<Field>> {
    let grid = model.grid();
    match preset {
        Preset::Equilibrium => {
            let base = base_levels(model)?;
            Ok(base.iter().map(|&v| Field::constant(grid, v)).collect())
        }
        Preset::Extinct => {
            if !matches!(model.kind(), ModelKind::ClosedSix | ModelKind::RescaledOpen) {
                return Err(Error::invalid(
                    "the extinct preset applies to the closed/rescaled kinds only",
                ));
            }
            let eq = equilibrium_extinct(model.params(), model.params().m0)?;
            Ok(eq.values().iter().map(|&v| Field::constant(grid, v)).collect())
        }
        Preset::Perturbed { amplitude, mode } => {
            let base = base_levels(model)?;
            let pi = std::f64::consts::PI;
            let mode = *mode as f64;
            let amplitude = *amplitude;
            Ok(base
                .iter()
                .map(|&v| {
                    Field::from_fn(grid, |x, y| {
                        let mut profile = (mode * pi * x / grid.length(0)).cos();
                        if grid.dim() == 2 {
                            profile *= (mode * pi * y / grid.length(1)).cos();
                        }
                        v * (1.0 + amplitude * profile)
                    })
                })
                .collect())
        }
        Preset::Random { amplitude } => {
            let base = base_levels(model)?;
            let transform = CosineTransform::new(grid);
            let k_max = (grid.n(0) - 1).min(32);
            let z: f64 = (1..=k_max).map(|k| (k as f64).powi(-3)).sum();
            let mut fields = Vec::with_capacity(base.len());
            for (s, &v) in base.iter().enumerate() {
                let mut rng = SplitMix64::seed_from_u64(seed ^ ((s as u64 + 1) << 32));
                let mut modal = vec![0.0; grid.len()];
                modal[0] = 1.0;
                for (k, slot) in modal.iter_mut().enumerate().take(k_max + 1).skip(1) {
                    let u = 2.0 * rng.next_unit() - 1.0;
                    *slot = amplitude * u * (k as f64).powi(-3) / z;
                }
                fields.push(transform.from_modal(&modal)?.scaled(v));
            }
            if matches!(model.kind(), ModelKind::ClosedSix | ModelKind::RescaledOpen) {
                let total: f64 = fields
                    .iter()
                    .map(|f| grid_ops::integrate(f, grid))
                    .sum::<Result<f64>>()?;
                let target = model.params().m0 * grid.measure();
                if total > 0.0 {
                    let factor = target / total;
                    for f in &mut fields {
                        *f = f.scaled(factor);
                    }
                }
            }
            Ok(fields)
        }
        Preset::File(dir) => {
            let mut fields = Vec::with_capacity(model.n_species());
            for name in model.species() {
                let path = dir.join(format!("{name}.bin"));
                let (field, file_grid) = grid_ops::load_field_binary(&path)?;
                if &file_grid != grid {
                    return Err(Error::mismatch(format!(
                        "field file '{}' was written on a different grid",
                        path.display()
                    )));
                }
                fields.push(field);
            }
            Ok(fields)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parsing() {
        assert_eq!(parse_preset("equilibrium").unwrap(), Preset::Equilibrium);
        assert_eq!(parse_preset("extinct").unwrap(), Preset::Extinct);
        assert_eq!(
            parse_preset("equilibrium-perturbed:0.1:2").unwrap(),
            Preset::Perturbed {
                amplitude: 0.1,
                mode: 2
            }
        );
        assert_eq!(
            parse_preset("random:0.3").unwrap(),
            Preset::Random { amplitude: 0.3 }
        );
        assert!(matches!(parse_preset("file:some/dir").unwrap(), Preset::File(_)));
        assert!(parse_preset("bogus").is_err());
        assert!(parse_preset("equilibrium-perturbed:1.5:2").is_err());
        assert!(parse_preset("random:1.2").is_err());
    }
}
