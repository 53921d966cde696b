//! Tensor sine modes on axis-aligned boxes, Gauss–Legendre quadrature and
//! L² projection.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Points this far outside the box (relative to its edge length) are clamped
/// onto the boundary instead of rejected.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Axis-aligned box `∏ (lower_i, upper_i)` in one to three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidParameter(format!(
                "box has {} lower and {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        if !(1..=3).contains(&lower.len()) {
            return Err(Error::UnsupportedDimension(lower.len()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box bounds".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(Error::InvalidParameter(format!(
                "box side {i} is empty: [{}, {}]",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `(0,1)^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![T::zero(); dim], vec![T::one(); dim])
    }

    /// `(−half_width, half_width)^dim`.
    pub fn centered(dim: usize, half_width: T) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn length(&self, i: usize) -> T {
        self.upper[i] - self.lower[i]
    }

    pub fn volume(&self) -> T {
        (0..self.dim()).map(|i| self.length(i)).fold(T::one(), |a, b| a * b)
    }

    pub fn center(&self) -> Vec<T> {
        (0..self.dim())
            .map(|i| T::lit(0.5) * (self.lower[i] + self.upper[i]))
            .collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    /// Whether `x` lies on `∂Ω`.
    pub fn on_boundary(&self, x: &[T]) -> bool {
        self.contains(x) && (0..self.dim()).any(|i| x[i] == self.lower[i] || x[i] == self.upper[i])
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        let outside = || Error::OutOfDomain {
            point: x.iter().map(|v| v.to_f64_lossy()).collect(),
        };
        if x.len() != self.dim() {
            return Err(outside());
        }
        for i in 0..self.dim() {
            let slack = T::lit(BOUNDARY_SLACK) * self.length(i);
            if !(x[i] >= self.lower[i] - slack && x[i] <= self.upper[i] + slack) {
                return Err(outside());
            }
        }
        Ok(())
    }

    /// Uniform lattice with `per_dim` points per side, boundary included,
    /// last coordinate fastest.
    pub fn lattice(&self, per_dim: usize) -> Vec<Vec<T>> {
        let per_dim = per_dim.max(2);
        let dim = self.dim();
        let total = per_dim.pow(dim as u32);
        let denom = T::of_usize(per_dim - 1);
        (0..total)
            .map(|mut flat| {
                let mut p = vec![T::zero(); dim];
                for i in (0..dim).rev() {
                    let k = flat % per_dim;
                    flat /= per_dim;
                    p[i] = if k + 1 == per_dim {
                        self.upper[i]
                    } else {
                        self.lower[i] + self.length(i) * T::of_usize(k) / denom
                    };
                }
                p
            })
            .collect()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Tensor Gauss–Legendre rule on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T> {
    dim: usize,
    order: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Quadrature<T> {
    /// `order` points per dimension; exact for per-dimension degree `2·order − 1`.
    pub fn tensor(domain: &BoxDomain<T>, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "quadrature order must be at least 1".into(),
            ));
        }
        let (x, w) = gauss_legendre(order);
        let dim = domain.dim();
        let total = order.pow(dim as u32);
        let mut nodes = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let half = T::lit(0.5);
        for mut flat in 0..total {
            let mut digits = vec![0; dim];
            for d in digits.iter_mut().rev() {
                *d = flat % order;
                flat /= order;
            }
            let mut weight = T::one();
            for (i, &k) in digits.iter().enumerate() {
                let len = domain.length(i);
                nodes.push(domain.lower[i] + half * len * (T::lit(x[k]) + T::one()));
                weight = weight * half * len * T::lit(w[k]);
            }
            weights.push(weight);
        }
        Ok(Self {
            dim,
            order,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[T] {
        &self.nodes[q * self.dim..(q + 1) * self.dim]
    }

    pub fn weight(&self, q: usize) -> T {
        self.weights[q]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(&[T]) -> T) -> T {
        (0..self.len()).map(|q| self.weights[q] * f(self.node(q))).sum()
    }
}

/// Orthonormal tensor sine modes `∏ √(2/L_i) sin(k_i π (x_i − a_i)/L_i)`,
/// `k ∈ {1..m}^N` in lexicographic order with the last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinBasis<T> {
    domain: BoxDomain<T>,
    modes_per_dim: usize,
    indices: Vec<Vec<usize>>,
}

impl<T: Scalar> GalerkinBasis<T> {
    pub fn new(domain: BoxDomain<T>, modes_per_dim: usize) -> Result<Self> {
        if modes_per_dim == 0 {
            return Err(Error::InvalidParameter(
                "modes_per_dim must be at least 1".into(),
            ));
        }
        let dim = domain.dim();
        let total = modes_per_dim.pow(dim as u32);
        let indices = (0..total)
            .map(|mut flat| {
                let mut k = vec![0; dim];
                for ki in k.iter_mut().rev() {
                    *ki = flat % modes_per_dim + 1;
                    flat /= modes_per_dim;
                }
                k
            })
            .collect();
        Ok(Self {
            domain,
            modes_per_dim,
            indices,
        })
    }

    pub fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn modes_per_dim(&self) -> usize {
        self.modes_per_dim
    }

    /// Total number of modes `m^N`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn multi_index(&self, k: usize) -> &[usize] {
        &self.indices[k]
    }

    /// Position of a multi-index (entries from 1) in the mode ordering.
    pub fn position(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dim() || index.iter().any(|&k| k == 0 || k > self.modes_per_dim) {
            return None;
        }
        Some(index.iter().fold(0, |acc, &k| acc * self.modes_per_dim + (k - 1)))
    }

    /// Dirichlet Laplacian eigenvalue `Σ (k_i π / L_i)²` of mode `k`.
    pub fn eigenvalue(&self, k: usize) -> T {
        self.indices[k]
            .iter()
            .enumerate()
            .map(|(i, &ki)| (T::of_usize(ki) * T::PI() / self.domain.length(i)).powi(2))
            .sum()
    }

    /// `2m + 12` points per dimension: enough for the Gram matrix of the
    /// sine modes to be the identity to about 1e−13.
    pub fn default_quadrature_order(&self) -> usize {
        2 * self.modes_per_dim + 12
    }

    pub fn default_quadrature(&self) -> Quadrature<T> {
        Quadrature::tensor(&self.domain, self.default_quadrature_order())
            .expect("positive order")
    }

    /// Per-dimension sine and derivative factors, `m` each, at `x`.
    fn factors(&self, x: &[T], sines: &mut [T], derivs: &mut [T]) {
        let m = self.modes_per_dim;
        for i in 0..self.dim() {
            let (a, len) = (self.domain.lower[i], self.domain.length(i));
            let scale = (T::lit(2.0) / len).sqrt();
            let on_edge = x[i] <= a || x[i] >= self.domain.upper[i];
            let xi = x[i].max(a).min(self.domain.upper[i]);
            let phase = T::PI() * (xi - a) / len;
            for k in 1..=m {
                let kk = T::of_usize(k);
                let (s, c) = (kk * phase).sin_cos();
                sines[i * m + k - 1] = if on_edge { T::zero() } else { scale * s };
                derivs[i * m + k - 1] = scale * kk * T::PI() / len * c;
            }
        }
    }

    fn fill(&self, x: &[T], values: &mut [T], grads: Option<&mut [T]>) {
        let (m, dim) = (self.modes_per_dim, self.dim());
        let mut sines = vec![T::zero(); dim * m];
        let mut derivs = sines.clone();
        self.factors(x, &mut sines, &mut derivs);
        for (k, idx) in self.indices.iter().enumerate() {
            values[k] = idx
                .iter()
                .enumerate()
                .fold(T::one(), |acc, (i, &ki)| acc * sines[i * m + ki - 1]);
        }
        if let Some(grads) = grads {
            for (k, idx) in self.indices.iter().enumerate() {
                for j in 0..dim {
                    let mut g = T::one();
                    for (i, &ki) in idx.iter().enumerate() {
                        g = g * if i == j {
                            derivs[i * m + ki - 1]
                        } else {
                            sines[i * m + ki - 1]
                        };
                    }
                    grads[k * dim + j] = g;
                }
            }
        }
    }

    /// Values of every mode at `x`.
    pub fn eval_modes(&self, x: &[T]) -> Result<Vec<T>> {
        self.domain.check_point(x)?;
        let mut values = vec![T::zero(); self.len()];
        self.fill(x, &mut values, None);
        Ok(values)
    }

    /// Gradients of every mode at `x`: row `k` holds `∇v_k`.
    pub fn grad_modes(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.domain.check_point(x)?;
        let dim = self.dim();
        let mut values = vec![T::zero(); self.len()];
        let mut flat = vec![T::zero(); self.len() * dim];
        self.fill(x, &mut values, Some(&mut flat));
        Ok(flat.chunks(dim).map(|c| c.to_vec()).collect())
    }

    /// `Σ c_k v_k(x)`.
    pub fn combine(&self, coefficients: &[T], x: &[T]) -> Result<T> {
        let values = self.eval_modes(x)?;
        Ok(values.iter().zip(coefficients).map(|(&v, &c)| v * c).sum())
    }

    /// L² projection under `quad`: the coefficients whose residual is
    /// quadrature-orthogonal to every mode.
    pub fn project_l2(&self, field: impl Fn(&[T]) -> T, quad: &Quadrature<T>) -> Result<Vec<T>> {
        let table = ModeTable::new(self, quad);
        let samples: Vec<T> = (0..quad.len()).map(|q| field(quad.node(q))).collect();
        if let Some(q) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::FieldNonFinite {
                node: q,
                x: quad.node(q).iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
        table.project(&samples)
    }

    /// Key/value description for run metadata.
    pub fn describe(&self) -> Vec<(String, String)> {
        let fmt = |v: &[T]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        vec![
            ("basis".into(), "tensor sine".into()),
            ("dimension".into(), self.dim().to_string()),
            ("lower".into(), fmt(&self.domain.lower)),
            ("upper".into(), fmt(&self.domain.upper)),
            ("modes_per_dim".into(), self.modes_per_dim.to_string()),
            ("modes".into(), self.len().to_string()),
        ]
    }
}

/// Mode values and gradients tabulated at every quadrature node.
#[derive(Debug, Clone)]
pub struct ModeTable<T> {
    modes: usize,
    dim: usize,
    weights: Vec<T>,
    values: Vec<T>,
    grads: Vec<T>,
}

impl<T: Scalar> ModeTable<T> {
    pub fn new(basis: &GalerkinBasis<T>, quad: &Quadrature<T>) -> Self {
        let (n, dim) = (basis.len(), basis.dim());
        let mut values = vec![T::zero(); quad.len() * n];
        let mut grads = vec![T::zero(); quad.len() * n * dim];
        for q in 0..quad.len() {
            basis.fill(
                quad.node(q),
                &mut values[q * n..(q + 1) * n],
                Some(&mut grads[q * n * dim..(q + 1) * n * dim]),
            );
        }
        Self {
            modes: n,
            dim,
            weights: quad.weights().to_vec(),
            values,
            grads,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self, q: usize) -> T {
        self.weights[q]
    }

    /// Mode values at node `q`.
    pub fn values(&self, q: usize) -> &[T] {
        &self.values[q * self.modes..(q + 1) * self.modes]
    }

    /// Mode gradients at node `q`, `modes × dim` row-major.
    pub fn grads(&self, q: usize) -> &[T] {
        let w = self.modes * self.dim;
        &self.grads[q * w..(q + 1) * w]
    }

    /// `Σ c_k v_k` at node `q`.
    pub fn combine(&self, c: &[T], q: usize) -> T {
        self.values(q).iter().zip(c).map(|(&v, &c)| v * c).sum()
    }

    /// `Σ c_k ∇v_k` at node `q`, written into `out`.
    pub fn combine_grad(&self, c: &[T], q: usize, out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        let g = self.grads(q);
        for (k, &ck) in c.iter().enumerate() {
            for j in 0..self.dim {
                out[j] = out[j] + ck * g[k * self.dim + j];
            }
        }
    }

    /// Quadrature Gram matrix of the modes.
    pub fn gram(&self) -> Matrix<T> {
        let n = self.modes;
        let mut m = Matrix::zeros(n);
        for q in 0..self.nodes() {
            let w = self.weights[q];
            let v = self.values(q);
            for a in 0..n {
                let wa = w * v[a];
                for b in a..n {
                    m[(a, b)] = m[(a, b)] + wa * v[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                m[(a, b)] = m[(b, a)];
            }
        }
        m
    }

    /// `∫ s v_k` for node samples `s`.
    pub fn moments(&self, samples: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.modes];
        for q in 0..self.nodes() {
            let ws = self.weights[q] * samples[q];
            for (o, &v) in out.iter_mut().zip(self.values(q)) {
                *o = *o + ws * v;
            }
        }
        out
    }

    /// L² projection of node samples onto the modes.
    pub fn project(&self, samples: &[T]) -> Result<Vec<T>> {
        let b = self.moments(samples);
        Ok(self.gram().cholesky()?.solve(&b))
    }
}
