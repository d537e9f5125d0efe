//! Radial pair potentials and their Fourier data.

use crate::lattice::LatticeVector;
use crate::quadrature::integrate;
use crate::scalar::Real;
use crate::Error;

/// Half-width of the unit periodic box.
pub const BOX_HALF_WIDTH: f64 = 0.5;

const QUAD_RTOL: f64 = 1e-12;
const QUAD_PANELS: usize = 4000;

/// Piecewise-linear radial profile `(r_i, V_i)`, zero beyond the last node.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable<T> {
    r: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> RadialTable<T> {
    pub fn new(r: Vec<T>, v: Vec<T>) -> Result<Self, Error> {
        if r.len() < 2 || r.len() != v.len() {
            return Err(Error::Config("radial table needs at least two (r, V) rows".into()));
        }
        if r[0] < T::zero() || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("radial table r must be non-negative and strictly increasing".into()));
        }
        if v.iter().any(|x| *x < T::zero() || !x.is_finite()) {
            return Err(Error::Config("radial table V must be finite and non-negative".into()));
        }
        Ok(RadialTable { r, v })
    }

    /// Parses two comma-separated columns; lines starting with `#` and a
    /// non-numeric header row are skipped.
    pub fn parse_csv(text: &str) -> Result<Self, Error> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!("table line {}: expected two columns", lineno + 1)));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    r.push(T::lit(a));
                    v.push(T::lit(b));
                }
                _ if r.is_empty() => continue,
                _ => return Err(Error::Config(format!("table line {}: not a number", lineno + 1))),
            }
        }
        Self::new(r, v)
    }

    pub fn support(&self) -> T {
        *self.r.last().unwrap()
    }

    pub fn nodes(&self) -> &[T] {
        &self.r
    }

    pub fn value(&self, x: T) -> T {
        if x > self.support() {
            return T::zero();
        }
        if x <= self.r[0] {
            return self.v[0];
        }
        let i = self.r.partition_point(|ri| *ri <= x).min(self.r.len() - 1);
        let (r0, r1, v0, v1) = (self.r[i - 1], self.r[i], self.v[i - 1], self.v[i]);
        v0 + (v1 - v0) * (x - r0) / (r1 - r0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialFamily<T> {
    /// `v·1_{|x| ≤ R}`.
    Step,
    /// `v·exp(−|x|²/(2w²))·1_{|x| ≤ R}`.
    Gaussian { width: T },
    /// `v·table(|x|)`, support ends at the last node.
    Table(RadialTable<T>),
}

/// Unscaled radial potential together with the particle number `N` used for
/// the Gross–Pitaevskii scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec<T> {
    pub family: PotentialFamily<T>,
    pub strength: T,
    pub radius: T,
    pub particles: u32,
}

impl<T: Real> PotentialSpec<T> {
    pub fn step(strength: T, radius: T, particles: u32) -> Result<Self, Error> {
        Self::new(PotentialFamily::Step, strength, radius, particles)
    }

    pub fn gaussian(strength: T, radius: T, width: T, particles: u32) -> Result<Self, Error> {
        Self::new(PotentialFamily::Gaussian { width }, strength, radius, particles)
    }

    pub fn table(table: RadialTable<T>, strength: T, particles: u32) -> Result<Self, Error> {
        let radius = table.support();
        Self::new(PotentialFamily::Table(table), strength, radius, particles)
    }

    pub fn new(family: PotentialFamily<T>, strength: T, radius: T, particles: u32) -> Result<Self, Error> {
        if !(strength >= T::zero()) || !strength.is_finite() {
            return Err(Error::Config(format!("potential strength must be non-negative, got {strength}")));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Config(format!("potential radius must be positive, got {radius}")));
        }
        if let PotentialFamily::Gaussian { width } = &family {
            if !(*width > T::zero()) {
                return Err(Error::Config("gaussian width must be positive".into()));
            }
        }
        if particles == 0 {
            return Err(Error::Config("particle number must be at least 1".into()));
        }
        let spec = PotentialSpec { family, strength, radius, particles };
        spec.check_support()?;
        Ok(spec)
    }

    /// Same potential at another particle number.
    pub fn with_particles(&self, particles: u32) -> Result<Self, Error> {
        Self::new(self.family.clone(), self.strength, self.radius, particles)
    }

    /// `V_N` must fit in the periodic unit box: `R ≤ N/2`.
    pub fn check_support(&self) -> Result<(), Error> {
        let reach = T::int(self.particles as i64) * T::lit(BOX_HALF_WIDTH);
        if reach < self.radius {
            return Err(Error::Config(format!(
                "support radius {} exceeds N·(box half-width) = {} for N = {}",
                self.radius, reach, self.particles
            )));
        }
        Ok(())
    }

    /// Radial profile `V(r)`.
    pub fn value(&self, r: T) -> T {
        if r > self.radius {
            return T::zero();
        }
        match &self.family {
            PotentialFamily::Step => self.strength,
            PotentialFamily::Gaussian { width } => {
                self.strength * (-(r * r) / (T::lit(2.0) * *width * *width)).exp()
            }
            PotentialFamily::Table(t) => self.strength * t.value(r),
        }
    }

    /// Points where the profile is not smooth, including `0` and `R`.
    pub fn breakpoints(&self) -> Vec<T> {
        match &self.family {
            PotentialFamily::Table(t) => {
                let mut b = vec![T::zero()];
                b.extend(t.nodes().iter().copied().filter(|x| *x > T::zero()));
                b
            }
            _ => vec![T::zero(), self.radius],
        }
    }

    /// `V̂(k) = 4π ∫ r² V(r) sin(kr)/(kr) dr` at physical momentum `k ≥ 0`.
    pub fn transform_at(&self, k: T) -> Result<T, Error> {
        if self.strength == T::zero() {
            return Ok(T::zero());
        }
        let four_pi = T::lit(4.0) * T::PI();
        if let PotentialFamily::Step = self.family {
            let r = self.radius;
            return Ok(four_pi * self.strength * r * r * r * step_kernel(k * r));
        }
        let f = |r: T| {
            let kr = k * r;
            let sinc = if kr.abs() < T::lit(1e-4) {
                T::one() - kr * kr / T::lit(6.0)
            } else {
                kr.sin() / kr
            };
            r * r * self.value_inside(r) * sinc
        };
        let b = self.breakpoints();
        let mut total = T::zero();
        for w in b.windows(2) {
            // split long pieces so each panel sees a few oscillations at most
            let pieces = ((k * (w[1] - w[0])).as_f64() / 8.0).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / T::int(pieces as i64);
            for j in 0..pieces {
                let a = w[0] + h * T::int(j as i64);
                let (val, _) = integrate(f, a, a + h, T::lit(QUAD_RTOL), QUAD_PANELS)?;
                total += val;
            }
        }
        Ok(four_pi * total)
    }

    // left limit at the outer edge so the last node keeps its tabulated value
    fn value_inside(&self, r: T) -> T {
        if r >= self.radius {
            return match &self.family {
                PotentialFamily::Table(t) => self.strength * t.value(t.support()),
                _ => self.value(self.radius),
            };
        }
        self.value(r)
    }

    /// `V̂(p)` at lattice momentum `p = 2πn`.
    pub fn fourier_coefficient(&self, p: LatticeVector) -> Result<T, Error> {
        self.transform_at(p.momentum_norm())
    }

    /// `V̂_N(r) = V̂(r/N)/N`.
    pub fn scaled_coefficient(&self, r: LatticeVector) -> Result<T, Error> {
        let n = T::int(self.particles as i64);
        Ok(self.transform_at(r.momentum_norm::<T>() / n)? / n)
    }

    /// `V̂(0) = ∫V`.
    pub fn integral(&self) -> Result<T, Error> {
        self.transform_at(T::zero())
    }

    /// Tabulates `V̂_N` for every `|n|² ≤ max_norm_sq`.
    pub fn scaled_table(&self, max_norm_sq: i64) -> Result<ScaledPotential<T>, Error> {
        let n = T::int(self.particles as i64);
        let two_pi = T::TAU();
        let values = (0..=max_norm_sq)
            .map(|s| {
                let k = two_pi * T::int(s).sqrt() / n;
                self.transform_at(k).map(|v| v / n)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ScaledPotential { values, particles: self.particles })
    }
}

/// `(sin x − x cos x)/x³`, with its Taylor series near zero.
fn step_kernel<T: Real>(x: T) -> T {
    if x.abs() < T::lit(0.1) {
        let x2 = x * x;
        T::one() / T::lit(3.0) - x2 / T::lit(30.0) + x2 * x2 / T::lit(840.0)
            - x2 * x2 * x2 / T::lit(45360.0)
    } else {
        (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// `V̂_N` tabulated by `|n|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledPotential<T> {
    values: Vec<T>,
    particles: u32,
}

impl<T: Real> ScaledPotential<T> {
    /// Panics if `r` lies outside the tabulated range.
    pub fn get(&self, r: LatticeVector) -> T {
        let s = r.norm_sq() as usize;
        assert!(s < self.values.len(), "|n|² = {s} beyond tabulated range");
        self.values[s]
    }

    pub fn max_norm_sq(&self) -> i64 {
        self.values.len() as i64 - 1
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    /// `V̂_N(0)`.
    pub fn at_zero(&self) -> T {
        self.values[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn step_closed_form() {
        let s = PotentialSpec::step(2.0, 0.25, 1).unwrap();
        let v0 = s.fourier_coefficient(LatticeVector::ZERO).unwrap();
        assert!((v0 - 4.0 / 3.0 * PI * 0.25f64.powi(3) * 2.0).abs() < 1e-15);
        let p = LatticeVector::new(1, 1, 0);
        let k: f64 = p.momentum_norm();
        let x = k * 0.25;
        let exact = 4.0 * PI * 2.0 * (x.sin() - x * x.cos()) / k.powi(3);
        assert!((s.fourier_coefficient(p).unwrap() - exact).abs() < 1e-13);
    }

    #[test]
    fn scaled_matches_closed_form() {
        let s = PotentialSpec::step(1.0, 0.25, 10).unwrap();
        let k = 2.0 * PI / 10.0;
        let x = k * 0.25;
        let exact = 4.0 * PI * (x.sin() - x * x.cos()) / k.powi(3) / 10.0;
        let got = s.scaled_coefficient(LatticeVector::new(1, 0, 0)).unwrap();
        assert!((got - exact).abs() < 1e-15, "{got} {exact}");
        let one = s.with_particles(1).unwrap();
        let p = LatticeVector::new(0, 2, 1);
        assert_eq!(one.scaled_coefficient(p).unwrap(), one.fourier_coefficient(p).unwrap());
    }

    #[test]
    fn zero_strength_is_zero() {
        let s = PotentialSpec::step(0.0, 0.3, 4).unwrap();
        assert_eq!(s.fourier_coefficient(LatticeVector::new(1, 2, 3)).unwrap(), 0.0);
        let g = PotentialSpec::gaussian(0.0, 0.3, 0.1, 4).unwrap();
        assert_eq!(g.fourier_coefficient(LatticeVector::ZERO).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_reproduces_step_through_table() {
        let t = RadialTable::new(vec![0.0, 0.2], vec![3.0, 3.0]).unwrap();
        let tab = PotentialSpec::table(t, 1.0, 1).unwrap();
        let step = PotentialSpec::<f64>::step(3.0, 0.2, 1).unwrap();
        for n in [LatticeVector::ZERO, LatticeVector::new(1, 0, 0), LatticeVector::new(3, 2, 1)] {
            let a = tab.fourier_coefficient(n).unwrap();
            let b = step.fourier_coefficient(n).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-3), "{a} {b}");
        }
    }

    #[test]
    fn gaussian_untruncated_limit() {
        // truncation far in the tail: compare with the full Gaussian transform
        let w: f64 = 0.05;
        let g = PotentialSpec::gaussian(1.0, 0.5, w, 1).unwrap();
        for k in [0.0, 3.0, 20.0] {
            let full = (2.0 * PI).powf(1.5) * w.powi(3) * (-(k * w).powi(2) / 2.0).exp();
            let got = g.transform_at(k).unwrap();
            assert!((got - full).abs() < 1e-12 * full, "{k}: {got} {full}");
        }
    }

    #[test]
    fn support_check_refuses_small_n() {
        assert!(PotentialSpec::step(1.0, 0.6, 1).is_err());
        assert!(PotentialSpec::step(1.0, 0.5, 1).is_ok());
        assert!(PotentialSpec::step(-1.0, 0.1, 1).is_err());
    }

    #[test]
    fn table_parsing() {
        let t = RadialTable::<f64>::parse_csv("r,V\n0,1\n0.1,0.5\n0.2,0\n").unwrap();
        assert_eq!(t.support(), 0.2);
        assert!((t.value(0.05) - 0.75).abs() < 1e-15);
        assert!(RadialTable::<f64>::parse_csv("0,1\n0,2\n").is_err());
        assert!(RadialTable::<f64>::parse_csv("0,1\n0.1,-2\n").is_err());
    }

    #[test]
    fn scaled_table_lookup() {
        let s = PotentialSpec::step(5.0, 0.2, 8).unwrap();
        let t = s.scaled_table(12).unwrap();
        let v = LatticeVector::new(2, -2, 2);
        assert_eq!(t.get(v), s.scaled_coefficient(v).unwrap());
        assert_eq!(t.at_zero(), s.integral().unwrap() / 8.0);
    }
}
