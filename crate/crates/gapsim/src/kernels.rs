//! Covariance kernels with analytic first and second derivatives and the
//! spectral constants derived from them.
//!
//! A kernel here is a base shape (gaussian or cauchy) composed with an
//! amplitude factor `c` and a dilation `K(x / len)`. Derivatives are analytic
//! per kernel; finite differences appear only in tests.

use crate::error::{Error, Result};

/// Tail decay classification of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass {
    /// `K(x) x^a -> 0` for every `a > 0`.
    SuperPoly,
    /// `K(x) ~ x^{-alpha}` up to the amplitude/dilation normalization.
    Poly(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BaseKernel {
    /// `K(x) = exp(-x^2 / 2)`
    Gaussian,
    /// `K(x) = (1 + x^2)^{-alpha/2}`, `alpha` in (0,2), `alpha != 1`
    Cauchy { alpha: f64 },
}

impl BaseKernel {
    fn eval(&self, u: f64) -> f64 {
        match *self {
            BaseKernel::Gaussian => (-0.5 * u * u).exp(),
            BaseKernel::Cauchy { alpha } => (1.0 + u * u).powf(-alpha / 2.0),
        }
    }

    fn d1(&self, u: f64) -> f64 {
        match *self {
            BaseKernel::Gaussian => -u * (-0.5 * u * u).exp(),
            BaseKernel::Cauchy { alpha } => -alpha * u * (1.0 + u * u).powf(-alpha / 2.0 - 1.0),
        }
    }

    fn d2(&self, u: f64) -> f64 {
        match *self {
            BaseKernel::Gaussian => (u * u - 1.0) * (-0.5 * u * u).exp(),
            BaseKernel::Cauchy { alpha } => {
                alpha * ((alpha + 1.0) * u * u - 1.0) * (1.0 + u * u).powf(-alpha / 2.0 - 2.0)
            }
        }
    }

    fn lambda2(&self) -> f64 {
        -self.d2(0.0)
    }
}

/// A stationary covariance kernel `K(x) = c * B(x / len)`.
///
/// Immutable value object; cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Kernel {
    base: BaseKernel,
    amplitude: f64,
    lengthscale: f64,
}

impl Kernel {
    pub fn gaussian() -> Self {
        Kernel {
            base: BaseKernel::Gaussian,
            amplitude: 1.0,
            lengthscale: 1.0,
        }
    }

    pub fn cauchy(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 2.0 {
            return Err(Error::Param(format!(
                "cauchy kernel needs alpha in (0, 2), got {alpha}"
            )));
        }
        if alpha == 1.0 {
            return Err(Error::AlphaOne);
        }
        Ok(Kernel {
            base: BaseKernel::Cauchy { alpha },
            amplitude: 1.0,
            lengthscale: 1.0,
        })
    }

    /// Amplitude wrapper `c * K`.
    pub fn scaled(mut self, c: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::Param(format!("scale must be positive, got {c}")));
        }
        self.amplitude *= c;
        Ok(self)
    }

    /// Dilation wrapper `K(x / len)`.
    pub fn dilated(mut self, len: f64) -> Result<Self> {
        if !len.is_finite() || len <= 0.0 {
            return Err(Error::Param(format!("len must be positive, got {len}")));
        }
        self.lengthscale *= len;
        Ok(self)
    }

    /// Parse a kernel spec string: `gaussian`, `cauchy:alpha=0.5`, with
    /// optional `scale=` and `len=` modifiers, e.g. `gaussian:scale=2,len=0.5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let err = |reason: &str| Error::KernelSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (spec.trim(), ""),
        };
        let mut alpha: Option<f64> = None;
        let mut scale: Option<f64> = None;
        let mut len: Option<f64> = None;
        if !args.is_empty() {
            for pair in args.split(',') {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| err(&format!("expected key=value, got `{pair}`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| err(&format!("bad numeric value in `{pair}`")))?;
                match k.trim() {
                    "alpha" => alpha = Some(v),
                    "scale" => scale = Some(v),
                    "len" => len = Some(v),
                    other => return Err(err(&format!("unknown modifier `{other}`"))),
                }
            }
        }
        let mut kernel = match name {
            "gaussian" => {
                if alpha.is_some() {
                    return Err(err("gaussian takes no alpha"));
                }
                Kernel::gaussian()
            }
            "cauchy" => {
                let a = alpha.ok_or_else(|| err("cauchy requires alpha=<value>"))?;
                Kernel::cauchy(a).map_err(|e| err(&e.to_string()))?
            }
            other => return Err(err(&format!("unknown kernel `{other}`"))),
        };
        if let Some(c) = scale {
            kernel = kernel.scaled(c).map_err(|e| err(&e.to_string()))?;
        }
        if let Some(l) = len {
            kernel = kernel.dilated(l).map_err(|e| err(&e.to_string()))?;
        }
        Ok(kernel)
    }

    /// Canonical spec string, parseable by [`Kernel::parse`].
    pub fn name(&self) -> String {
        let mut s = match self.base {
            BaseKernel::Gaussian => "gaussian".to_string(),
            BaseKernel::Cauchy { alpha } => format!("cauchy:alpha={alpha}"),
        };
        let mut mods = Vec::new();
        if self.amplitude != 1.0 {
            mods.push(format!("scale={}", self.amplitude));
        }
        if self.lengthscale != 1.0 {
            mods.push(format!("len={}", self.lengthscale));
        }
        if !mods.is_empty() {
            if matches!(self.base, BaseKernel::Gaussian) {
                s.push(':');
            } else {
                s.push(',');
            }
            s.push_str(&mods.join(","));
        }
        s
    }

    /// `K(0)`.
    pub fn variance(&self) -> f64 {
        self.amplitude
    }

    /// Second spectral moment `-K''(0)`.
    pub fn lambda2(&self) -> f64 {
        self.amplitude * self.base.lambda2() / (self.lengthscale * self.lengthscale)
    }

    pub fn decay_class(&self) -> DecayClass {
        match self.base {
            BaseKernel::Gaussian => DecayClass::SuperPoly,
            BaseKernel::Cauchy { alpha } => DecayClass::Poly(alpha),
        }
    }

    pub(crate) fn eval_raw(&self, x: f64) -> f64 {
        self.amplitude * self.base.eval(x / self.lengthscale)
    }

    /// `K(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "kernel argument" });
        }
        Ok(self.eval_raw(x))
    }

    /// `K'(x)` (derivative in the lag).
    pub fn eval_d1(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "kernel argument" });
        }
        Ok(self.amplitude * self.base.d1(x / self.lengthscale) / self.lengthscale)
    }

    /// `K''(x)`.
    pub fn eval_d2(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "kernel argument" });
        }
        Ok(self.amplitude * self.base.d2(x / self.lengthscale)
            / (self.lengthscale * self.lengthscale))
    }

    /// Expected number of zeros per unit length, `(1/pi) sqrt(-K''(0)/K(0))`.
    pub fn rice_intensity(&self) -> f64 {
        (self.lambda2() / self.variance()).sqrt() / std::f64::consts::PI
    }

    /// Closed-form prediction for the linear coefficient of the scaling
    /// function, available only in the polynomial-decay regime with
    /// `alpha` in (0,1): `2 K(0) (1-alpha) sin(alpha pi/2) / (sqrt(pi) alpha)`.
    ///
    /// Returns `None` where no closed form is claimed (super-polynomial decay
    /// or `alpha > 1`).
    pub fn zeta_predicted(&self) -> Result<Option<f64>> {
        match self.decay_class() {
            DecayClass::SuperPoly => Ok(None),
            DecayClass::Poly(alpha) => {
                if alpha == 1.0 {
                    return Err(Error::AlphaOne);
                }
                if alpha > 1.0 {
                    return Ok(None);
                }
                let k0 = self.variance();
                Ok(Some(
                    2.0 * k0 * (1.0 - alpha) * (alpha * std::f64::consts::FRAC_PI_2).sin()
                        / (std::f64::consts::PI.sqrt() * alpha),
                ))
            }
        }
    }

    /// `sup_{x >= s} |K(x)|`. Both built-in shapes have |K| nonincreasing in
    /// |x|, which the wrappers preserve, so this is `|K(s)|`.
    pub fn kbar(&self, s: f64) -> f64 {
        self.eval_raw(s.abs()).abs()
    }

    /// Default grid spacing placing about `1/grid_factor` points between
    /// typical zeros.
    pub fn default_spacing(&self, grid_factor: f64) -> f64 {
        grid_factor / self.rice_intensity()
    }
}
