//! The QG tendency `∂ₜθ = -u_δ·∇θ - κ Λ^{2α} θ` in Fourier space.
//!
//! The quadratic term is written `b_l(θ, θ)`, the Fourier coefficient of
//! `-u·∇θ` at `l`:
//!
//! ```text
//! b_l = Σ_{j+k=l} |j|⁻¹ (j^⊥·k) θ̂(j) θ̂(k)
//!     = Σ_{j+k=l} γ^l_{j,k} θ̂(j) θ̂(k),   γ^l_{j,k} = ½ (j^⊥·l) (|k| - |j|) / (|j||k|)
//! ```
//!
//! Three interchangeable evaluations are provided: the direct convolution,
//! the symmetrized convolution and a pseudo-spectral product on a grid. The
//! grid is sized so the product is alias-free on every retained mode, which
//! makes all three paths agree to round-off.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{QgError, Result};
use crate::scalar::Real;
use crate::spectral::operators::truncate_in_place;
use crate::spectral::{
    gradient, retained_radius, smooth_size, velocity_from_theta, DealiasRule, Fft2, SpectralField,
    WaveVector,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityPath {
    #[default]
    Pseudospectral,
    Convolution,
    Symmetrized,
}

impl NonlinearityPath {
    pub fn as_str(self) -> &'static str {
        match self {
            NonlinearityPath::Pseudospectral => "pseudospectral",
            NonlinearityPath::Convolution => "convolution",
            NonlinearityPath::Symmetrized => "symmetrized",
        }
    }
}

impl fmt::Display for NonlinearityPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NonlinearityPath {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pseudospectral" => Ok(NonlinearityPath::Pseudospectral),
            "convolution" => Ok(NonlinearityPath::Convolution),
            "symmetrized" => Ok(NonlinearityPath::Symmetrized),
            other => Err(format!(
                "unknown nonlinearity `{other}` (expected pseudospectral, convolution or symmetrized)"
            )),
        }
    }
}

/// Physical parameters of the right-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsConfig<T> {
    /// Dissipation coefficient; 0 only for conservation tests.
    pub kappa: T,
    /// Dissipation power, `α = 1/2` is the critical case.
    pub alpha: T,
    /// Poisson mollification scale applied to the velocity; 0 is pure QG.
    pub delta: T,
    pub dealias: DealiasRule,
    pub nonlinearity: NonlinearityPath,
}

impl<T: Real> Default for RhsConfig<T> {
    fn default() -> Self {
        RhsConfig {
            kappa: T::one(),
            alpha: T::of(0.5),
            delta: T::zero(),
            dealias: DealiasRule::TwoThirds,
            nonlinearity: NonlinearityPath::Pseudospectral,
        }
    }
}

impl<T: Real> RhsConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= T::zero()) || !self.kappa.is_finite() {
            return Err(QgError::invalid("kappa", format!("must be finite and >= 0, got {}", self.kappa)));
        }
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return Err(QgError::invalid("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.delta >= T::zero()) || !self.delta.is_finite() {
            return Err(QgError::invalid("delta", format!("must be finite and >= 0, got {}", self.delta)));
        }
        Ok(())
    }

    /// `κ |j|^{2α}`, the decay rate of mode `j` under the linear part.
    pub fn dissipation_rate(&self, j: WaveVector) -> T {
        if j.is_zero() || self.kappa == T::zero() {
            return T::zero();
        }
        self.kappa * T::of(j.norm_sq() as f64).powf(self.alpha)
    }
}

/// `γ^l_{j,k} = ½ (j^⊥·l)(|k| - |j|)/(|j||k|)` with `l = j + k`.
pub fn gamma_coefficient<T: Real>(j: WaveVector, k: WaveVector) -> Result<T> {
    if j.is_zero() || k.is_zero() {
        return Err(QgError::ZeroWaveVector);
    }
    let l = j + k;
    let nj = j.norm::<T>();
    let nk = k.norm::<T>();
    Ok(T::of(0.5) * T::of(j.perp().dot(l) as f64) * (nk - nj) / (nj * nk))
}

/// Whether `|γ^l_{j,k}| ≤ |l|² / (2 max(|j|, |k|))`; trivially true for `l = 0`.
pub fn gamma_bound_holds(j: WaveVector, k: WaveVector) -> Result<bool> {
    let g = gamma_coefficient::<f64>(j, k)?;
    let l = j + k;
    if l.is_zero() {
        return Ok(true);
    }
    let bound = l.norm_sq() as f64 / (2.0 * j.norm::<f64>().max(k.norm::<f64>()));
    Ok(g.abs() <= bound)
}

/// Exactness-preserving grid size for products of fields truncated at
/// `n_max` under `rule`.
pub fn product_grid_size(n_max: usize, rule: DealiasRule) -> usize {
    let keep = retained_radius(n_max, rule);
    smooth_size((3 * keep + 1).max(3))
}

#[derive(Clone, Copy)]
enum ConvolutionForm {
    Direct,
    Symmetrized,
}

fn convolve<T: Real>(t: &SpectralField<T>, delta: T, keep: usize, form: ConvolutionForm) -> SpectralField<T> {
    let n = t.n_max();
    let keep = keep.min(n) as i32;
    let side = t.side();
    let zero = Complex::new(T::zero(), T::zero());
    // Active modes inside the retained square.
    let active: Vec<(WaveVector, Complex<T>, T, T)> = t
        .modes()
        .filter(|(j, c)| !j.is_zero() && j.max_norm() as i32 <= keep && (c.re != T::zero() || c.im != T::zero()))
        .map(|(j, c)| {
            let norm = j.norm::<T>();
            let weight = if delta == T::zero() {
                T::one() / norm
            } else {
                (-delta * norm).exp() / norm
            };
            (j, c, norm, weight)
        })
        .collect();

    let mut acc = vec![zero; side * side];
    let half = T::of(0.5);
    for &(j, cj, nj, wj) in &active {
        let jp = j.perp();
        for &(k, ck, nk, wk) in &active {
            let l = j + k;
            if l.is_zero() || l.j1.abs() > keep || l.j2.abs() > keep {
                continue;
            }
            let coef = match form {
                ConvolutionForm::Direct => wj * T::of(jp.dot(k) as f64),
                ConvolutionForm::Symmetrized => {
                    let cross = T::of(jp.dot(l) as f64);
                    if delta == T::zero() {
                        half * cross * (nk - nj) / (nj * nk)
                    } else {
                        half * cross * (wj - wk)
                    }
                }
            };
            let idx = ((l.j1 + n as i32) as usize) * side + (l.j2 + n as i32) as usize;
            acc[idx] = acc[idx] + cj * ck * coef;
        }
    }
    let mut out = SpectralField::zeros(n);
    out.coeffs_mut().copy_from_slice(&acc);
    out.force_zero_mean();
    out
}

/// `b_l(θ, θ)` by direct summation of the `|j|⁻¹ (j^⊥·k)` form over every
/// stored pair. Cost is `O(n_max⁴)`; meant as a validation oracle.
pub fn nonlinear_convolution<T: Real>(t: &SpectralField<T>) -> SpectralField<T> {
    convolve(t, T::zero(), t.n_max(), ConvolutionForm::Direct)
}

/// `b_l(θ, θ)` by summation of the symmetric `γ^l_{j,k}` form.
pub fn nonlinear_symmetrized<T: Real>(t: &SpectralField<T>) -> SpectralField<T> {
    convolve(t, T::zero(), t.n_max(), ConvolutionForm::Symmetrized)
}

/// `-(u_δ·∇θ)^` via grid products, dealiased per `cfg`.
pub fn nonlinear_pseudospectral<T: Real>(t: &SpectralField<T>, cfg: &RhsConfig<T>) -> Result<SpectralField<T>> {
    let cfg = RhsConfig {
        nonlinearity: NonlinearityPath::Pseudospectral,
        ..cfg.clone()
    };
    RhsEvaluator::new(t.n_max(), cfg)?.nonlinear(t)
}

/// Full tendency `dθ̂/dt` using the configured nonlinearity path.
pub fn tendency<T: Real>(t: &SpectralField<T>, cfg: &RhsConfig<T>) -> Result<SpectralField<T>> {
    RhsEvaluator::new(t.n_max(), cfg.clone())?.tendency(t)
}

/// `Re Σ_l b_l conj(θ̂(l))`, which vanishes for the exact nonlinearity.
pub fn energy_pairing<T: Real>(b: &SpectralField<T>, t: &SpectralField<T>) -> T {
    b.coeffs()
        .iter()
        .zip(t.coeffs())
        .fold(T::zero(), |acc, (x, y)| acc + (x * y.conj()).re)
}

/// Reusable evaluator holding the product grid, FFT plans and per-mode
/// dissipation rates for one truncation.
pub struct RhsEvaluator<T: Real> {
    cfg: RhsConfig<T>,
    n_max: usize,
    keep: usize,
    fft: Option<Fft2<T>>,
    rates: Vec<T>,
    mollifier: Vec<T>,
    u1: Vec<T>,
    u2: Vec<T>,
    d1: Vec<T>,
    d2: Vec<T>,
}

impl<T: Real> RhsEvaluator<T> {
    pub fn new(n_max: usize, cfg: RhsConfig<T>) -> Result<Self> {
        cfg.validate()?;
        if n_max == 0 {
            return Err(QgError::invalid("n_max", "must be at least 1"));
        }
        let keep = retained_radius(n_max, cfg.dealias);
        let probe = SpectralField::<T>::zeros(n_max);
        let rates = (0..probe.coeffs().len())
            .map(|i| cfg.dissipation_rate(probe.mode_at(i)))
            .collect();
        let mollifier = (0..probe.coeffs().len())
            .map(|i| (-cfg.delta * probe.mode_at(i).norm::<T>()).exp())
            .collect();
        let (fft, cells) = if cfg.nonlinearity == NonlinearityPath::Pseudospectral {
            let m = product_grid_size(n_max, cfg.dealias);
            (Some(Fft2::new(m)), m * m)
        } else {
            (None, 0)
        };
        Ok(RhsEvaluator {
            cfg,
            n_max,
            keep,
            fft,
            rates,
            mollifier,
            u1: vec![T::zero(); cells],
            u2: vec![T::zero(); cells],
            d1: vec![T::zero(); cells],
            d2: vec![T::zero(); cells],
        })
    }

    pub fn config(&self) -> &RhsConfig<T> {
        &self.cfg
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Largest retained `max(|j₁|, |j₂|)` after dealiasing.
    pub fn retained(&self) -> usize {
        self.keep
    }

    /// Per-mode linear decay rates `κ|j|^{2α}`, indexed like the coefficients.
    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    /// Product grid size, if the pseudo-spectral path is in use.
    pub fn grid_size(&self) -> Option<usize> {
        self.fft.as_ref().map(|f| f.m())
    }

    fn check(&self, t: &SpectralField<T>) -> Result<()> {
        if t.n_max() != self.n_max {
            return Err(QgError::ResolutionMismatch {
                left: t.n_max(),
                right: self.n_max,
            });
        }
        Ok(())
    }

    /// `b(θ, θ)`, the Fourier coefficients of `-u_δ·∇θ` on retained modes.
    pub fn nonlinear(&mut self, t: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check(t)?;
        match self.cfg.nonlinearity {
            NonlinearityPath::Convolution => Ok(convolve(t, self.cfg.delta, self.keep, ConvolutionForm::Direct)),
            NonlinearityPath::Symmetrized => Ok(convolve(t, self.cfg.delta, self.keep, ConvolutionForm::Symmetrized)),
            NonlinearityPath::Pseudospectral => self.pseudospectral(t),
        }
    }

    fn pseudospectral(&mut self, t: &SpectralField<T>) -> Result<SpectralField<T>> {
        let mut theta = t.clone();
        truncate_in_place(&mut theta, self.keep);
        let (mut u1, mut u2) = velocity_from_theta(&theta);
        if self.cfg.delta > T::zero() {
            for ((a, b), w) in u1.coeffs_mut().iter_mut().zip(u2.coeffs_mut()).zip(&self.mollifier) {
                *a = *a * *w;
                *b = *b * *w;
            }
        }
        let (d1, d2) = gradient(&theta);
        let fft = self.fft.as_mut().expect("pseudo-spectral evaluator has a grid");
        let keep = self.keep;
        fft.inverse_pair_within(&u1, Some(&u2), &mut self.u1, Some(&mut self.u2), keep)?;
        fft.inverse_pair_within(&d1, Some(&d2), &mut self.d1, Some(&mut self.d2), keep)?;
        for i in 0..self.u1.len() {
            // reuse u1 as the product buffer
            self.u1[i] = -(self.u1[i] * self.d1[i] + self.u2[i] * self.d2[i]);
        }
        fft.forward_real_within(&self.u1, self.n_max, keep)
    }

    /// `dθ̂/dt = b(θ, θ) - κ|j|^{2α} θ̂`.
    pub fn tendency(&mut self, t: &SpectralField<T>) -> Result<SpectralField<T>> {
        let mut out = self.nonlinear(t)?;
        for ((o, c), r) in out.coeffs_mut().iter_mut().zip(t.coeffs()).zip(&self.rates) {
            *o = *o - *c * *r;
        }
        out.force_zero_mean();
        Ok(out)
    }
}
