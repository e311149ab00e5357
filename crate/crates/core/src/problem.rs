//! Layered-earth traveltime model and its QUBO cost Hamiltonian.
//!
//! Ray `i` crosses layer `j` over a path length `D[i][j]`; with layer
//! slownesses `s` the traveltimes are `t = D s`. Each slowness is encoded
//! with `R` bits, `s_i = Σ_{r<R} x_{i,r} 2^r`, and variable `x_{i,r}` sits on
//! qubit `i·R + r`. Substituting the encoding into `‖D s − t‖²` gives a QUBO
//! over `R·M` binary variables whose minimum, zero, is attained exactly at
//! the encoded solution of the system.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circuit::DiagonalObservable;
use crate::rng;
use crate::{Error, Result};

/// Widest slowness encoding accepted (basis labels are `u64`).
pub const MAX_BITS: u32 = 32;

/// Square path-length matrix, row-major. Row `i` is ray `i`, column `j` layer `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::Dimension(format!(
                "distance matrix needs {n}×{n} = {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(
                "distance matrix rows must all have length M".into(),
            ));
        }
        Self::from_row_major(n, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_row_major(n, data)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, ray: usize, layer: usize) -> f64 {
        self.data[ray * self.n + layer]
    }

    pub fn row(&self, ray: usize) -> &[f64] {
        &self.data[ray * self.n..(ray + 1) * self.n]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == 0.0))
    }
}

/// `t = D s`.
pub fn forward_times(distances: &DistanceMatrix, slowness: &[f64]) -> Result<Vec<f64>> {
    let n = distances.size();
    if slowness.len() != n {
        return Err(Error::Dimension(format!(
            "slowness has {} entries, distance matrix is {n}×{n}",
            slowness.len()
        )));
    }
    Ok((0..n)
        .map(|i| {
            distances
                .row(i)
                .iter()
                .zip(slowness)
                .map(|(d, s)| d * s)
                .sum()
        })
        .collect())
}

/// Bit layout of the slowness vector: `x_{layer,bit}` on qubit `layer·R + bit`
/// with weight `2^bit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Encoding {
    nlayers: usize,
    bits: u32,
}

impl Encoding {
    pub fn new(nlayers: usize, bits: u32) -> Result<Self> {
        if nlayers == 0 {
            return Err(Error::InvalidProblem(
                "layer count must be at least 1".into(),
            ));
        }
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::InvalidProblem(format!(
                "bit width must be in 1..={MAX_BITS}, got {bits}"
            )));
        }
        Ok(Self { nlayers, bits })
    }

    pub fn nlayers(&self) -> usize {
        self.nlayers
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn nqubits(&self) -> usize {
        self.nlayers * self.bits as usize
    }

    pub fn qubit(&self, layer: usize, bit: u32) -> usize {
        layer * self.bits as usize + bit as usize
    }

    /// Exclusive upper bound of representable slowness values, `2^R`.
    pub fn limit(&self) -> u64 {
        1u64 << self.bits
    }

    /// Binary variables in qubit order.
    pub fn encode(&self, slowness: &[u64]) -> Result<Vec<u8>> {
        self.check_layers(slowness.len())?;
        let mut x = vec![0u8; self.nqubits()];
        for (layer, &s) in slowness.iter().enumerate() {
            if s >= self.limit() {
                return Err(Error::SlownessOutOfRange {
                    layer,
                    value: s,
                    bits: self.bits,
                });
            }
            for bit in 0..self.bits {
                x[self.qubit(layer, bit)] = (s >> bit & 1) as u8;
            }
        }
        Ok(x)
    }

    pub fn decode(&self, x: &[u8]) -> Result<Vec<u64>> {
        if x.len() != self.nqubits() {
            return Err(Error::Dimension(format!(
                "bitstring has {} bits, encoding uses {}",
                x.len(),
                self.nqubits()
            )));
        }
        Ok((0..self.nlayers)
            .map(|layer| {
                (0..self.bits)
                    .map(|bit| u64::from(x[self.qubit(layer, bit)] & 1) << bit)
                    .sum()
            })
            .collect())
    }

    /// Basis index of the encoded slowness (qubit 0 least significant).
    pub fn encode_index(&self, slowness: &[u64]) -> Result<usize> {
        if self.nqubits() >= usize::BITS as usize {
            return Err(Error::Dimension(
                "encoding too wide for a basis index".into(),
            ));
        }
        Ok(self
            .encode(slowness)?
            .iter()
            .enumerate()
            .map(|(q, &b)| usize::from(b) << q)
            .sum())
    }

    pub fn decode_index(&self, basis: usize) -> Vec<u64> {
        let mask = (1u64 << self.bits) - 1;
        (0..self.nlayers)
            .map(|layer| (basis as u64 >> (layer * self.bits as usize)) & mask)
            .collect()
    }

    fn check_layers(&self, len: usize) -> Result<()> {
        if len != self.nlayers {
            return Err(Error::Dimension(format!(
                "slowness has {len} entries, encoding has {} layers",
                self.nlayers
            )));
        }
        Ok(())
    }
}

/// A traveltime inversion instance.
///
/// Serialized as `{"M", "R", "D" (row-major), "t", "slowness_true"?, "seed"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemFile", into = "ProblemFile")]
pub struct LayeredProblem {
    distances: DistanceMatrix,
    times: Vec<f64>,
    encoding: Encoding,
    slowness_true: Option<Vec<u64>>,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(rename = "M")]
    nlayers: usize,
    #[serde(rename = "R")]
    bits: u32,
    #[serde(rename = "D")]
    distances: Vec<f64>,
    t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slowness_true: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl TryFrom<ProblemFile> for LayeredProblem {
    type Error = Error;

    fn try_from(file: ProblemFile) -> Result<Self> {
        let distances = DistanceMatrix::from_row_major(file.nlayers, file.distances)?;
        let mut problem = Self::new(distances, file.t, file.bits, file.slowness_true)?;
        problem.seed = file.seed;
        Ok(problem)
    }
}

impl From<LayeredProblem> for ProblemFile {
    fn from(p: LayeredProblem) -> Self {
        Self {
            nlayers: p.nlayers(),
            bits: p.bits(),
            distances: p.distances.data,
            t: p.times,
            slowness_true: p.slowness_true,
            seed: p.seed,
        }
    }
}

impl LayeredProblem {
    pub fn new(
        distances: DistanceMatrix,
        times: Vec<f64>,
        bits: u32,
        slowness_true: Option<Vec<u64>>,
    ) -> Result<Self> {
        let m = distances.size();
        let encoding = Encoding::new(m, bits)?;
        if times.len() != m {
            return Err(Error::Dimension(format!(
                "{} traveltimes for {m} layers",
                times.len()
            )));
        }
        if distances
            .as_row_major()
            .iter()
            .any(|d| !d.is_finite() || *d < 0.0)
        {
            return Err(Error::InvalidProblem(
                "path lengths must be finite and nonnegative".into(),
            ));
        }
        if !distances.is_upper_triangular() {
            return Err(Error::InvalidProblem(
                "distance matrix must be upper-triangular".into(),
            ));
        }
        if let Some(ray) = (0..m).find(|&i| distances.row(i).iter().all(|&d| d == 0.0)) {
            return Err(Error::InvalidProblem(format!("ray {ray} crosses no layer")));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidProblem("traveltimes must be finite".into()));
        }
        if let Some(s) = &slowness_true {
            encoding.encode(s)?;
            let s: Vec<f64> = s.iter().map(|&v| v as f64).collect();
            if forward_times(&distances, &s)? != times {
                return Err(Error::InvalidProblem(
                    "traveltimes are not D · slowness_true".into(),
                ));
            }
        }
        Ok(Self {
            distances,
            times,
            encoding,
            slowness_true,
            seed: None,
        })
    }

    /// Builds `D` from straight rays through a flat-layered column and sets
    /// `t = D s` for the given slownesses.
    ///
    /// Each ray is `(source_depth, detector_depth, horizontal_offset)`; ray
    /// `i` must not enter layers above layer `i`.
    pub fn from_rays(
        thicknesses: &[f64],
        rays: &[(f64, f64, f64)],
        slowness: Vec<u64>,
        bits: u32,
    ) -> Result<Self> {
        if rays.len() != thicknesses.len() {
            return Err(Error::Dimension(format!(
                "{} rays for {} layers",
                rays.len(),
                thicknesses.len()
            )));
        }
        let rows = rays
            .iter()
            .map(|&(zs, zd, offset)| straight_ray_distances(thicknesses, zs, zd, offset))
            .collect::<Result<Vec<_>>>()?;
        let distances = DistanceMatrix::from_rows(rows)?;
        let s: Vec<f64> = slowness.iter().map(|&v| v as f64).collect();
        let times = forward_times(&distances, &s)?;
        Self::new(distances, times, bits, Some(slowness))
    }

    pub fn nlayers(&self) -> usize {
        self.distances.size()
    }

    pub fn bits(&self) -> u32 {
        self.encoding.bits()
    }

    pub fn nqubits(&self) -> usize {
        self.encoding.nqubits()
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slowness_true(&self) -> Option<&[u64]> {
        self.slowness_true.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `‖D s − t‖²`.
    pub fn objective(&self, slowness: &[f64]) -> Result<f64> {
        let predicted = forward_times(&self.distances, slowness)?;
        Ok(predicted
            .iter()
            .zip(&self.times)
            .map(|(p, t)| (p - t) * (p - t))
            .sum())
    }

    /// Objective of an integer slowness vector.
    pub fn objective_int(&self, slowness: &[u64]) -> Result<f64> {
        let s: Vec<f64> = slowness.iter().map(|&v| v as f64).collect();
        self.objective(&s)
    }

    /// Expands `‖D·decode(x) − t‖²` into `xᵀQx + c`.
    ///
    /// With `a_{k,q} = D[k][layer(q)]·2^{bit(q)}` the residual of ray `k` is
    /// `Σ_q a_{k,q} x_q − t_k`; squaring and using `x_q² = x_q` gives
    /// `Q_pq = Σ_k a_{k,p} a_{k,q}` off the diagonal,
    /// `Q_qq = Σ_k a_{k,q}² − 2 t_k a_{k,q}` and `c = Σ_k t_k²`.
    pub fn build_qubo(&self) -> Qubo {
        let n = self.nqubits();
        let m = self.nlayers();
        let enc = self.encoding;
        let weights: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let mut a = vec![0.0; n];
                for layer in 0..m {
                    for bit in 0..enc.bits() {
                        a[enc.qubit(layer, bit)] =
                            self.distances.get(k, layer) * (1u64 << bit) as f64;
                    }
                }
                a
            })
            .collect();

        let mut q = vec![0.0; n * n];
        for (a, &t) in weights.iter().zip(&self.times) {
            for p in 0..n {
                if a[p] == 0.0 {
                    continue;
                }
                for r in 0..n {
                    q[p * n + r] += a[p] * a[r];
                }
                q[p * n + p] -= 2.0 * t * a[p];
            }
        }
        let offset = self.times.iter().map(|t| t * t).sum();
        Qubo { n, q, offset }
    }

    /// QUBO, its energy table and the encoding, bundled for the solvers.
    pub fn hamiltonian(&self) -> Result<CostHamiltonian> {
        let qubo = self.build_qubo();
        let observable = qubo.to_observable()?;
        Ok(CostHamiltonian {
            encoding: self.encoding,
            qubo,
            observable,
        })
    }
}

/// `E(x) = xᵀQx + c` with `Q` symmetric and the linear terms on its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Qubo {
    n: usize,
    q: Vec<f64>,
    offset: f64,
}

impl Qubo {
    /// `q` is row-major `n×n` and must be symmetric.
    pub fn new(n: usize, q: Vec<f64>, offset: f64) -> Result<Self> {
        if q.len() != n * n {
            return Err(Error::Dimension(format!(
                "QUBO matrix needs {} entries",
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if q[i * n + j] != q[j * n + i] {
                    return Err(Error::InvalidProblem(format!(
                        "QUBO matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, q, offset })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            q: vec![0.0; n * n],
            offset: 0.0,
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy(&self, x: &[u8]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut e = self.offset;
        for i in (0..self.n).filter(|&i| x[i] != 0) {
            let row = &self.q[i * self.n..(i + 1) * self.n];
            e += row
                .iter()
                .zip(x)
                .filter(|(_, &xj)| xj != 0)
                .map(|(q, _)| q)
                .sum::<f64>();
        }
        e
    }

    /// Energy of the basis state `basis` (qubit 0 least significant).
    pub fn energy_index(&self, basis: usize) -> f64 {
        let x: Vec<u8> = (0..self.n).map(|q| (basis >> q & 1) as u8).collect();
        self.energy(&x)
    }

    /// Energy table over all `2^n` basis states.
    ///
    /// Built incrementally: removing the lowest set bit `i` from `x` leaves
    /// `x'` with `E(x) = E(x') + Q_ii + 2 Σ_{j∈x'} Q_ij`.
    pub fn to_observable(&self) -> Result<DiagonalObservable> {
        let n = self.n;
        if n == 0 || n > crate::circuit::MAX_QUBITS {
            return Err(Error::InvalidQubitCount {
                got: n,
                max: crate::circuit::MAX_QUBITS,
            });
        }
        let mut table = vec![0.0; 1 << n];
        table[0] = self.offset;
        for x in 1usize..1 << n {
            let i = x.trailing_zeros() as usize;
            let rest = x & (x - 1);
            let row = &self.q[i * n..(i + 1) * n];
            let mut coupling = 0.0;
            let mut bits = rest;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                coupling += row[j];
                bits &= bits - 1;
            }
            table[x] = table[rest] + row[i] + 2.0 * coupling;
        }
        DiagonalObservable::from_table(table)
    }

    /// Substitutes `x = (1 − z)/2`, so `x = 0 ↦ z = +1`.
    pub fn to_ising(&self) -> IsingModel {
        let n = self.n;
        let mut couplings = vec![0.0; n * n];
        let mut fields = vec![0.0; n];
        let mut offset = self.offset;
        for i in 0..n {
            let qii = self.coefficient(i, i);
            fields[i] -= 0.5 * qii;
            offset += 0.5 * qii;
            for j in 0..n {
                if j == i {
                    continue;
                }
                // Pair (i, j) contributes 2·Q_ij x_i x_j in total, half from each ordering.
                let qij = self.coefficient(i, j);
                couplings[i * n + j] = 0.5 * qij;
                fields[i] -= 0.5 * qij;
                if j > i {
                    offset += 0.5 * qij;
                }
            }
        }
        IsingModel {
            n,
            couplings,
            fields,
            offset,
        }
    }
}

/// `E(z) = Σ_{i<j} J_ij z_i z_j + Σ_i h_i z_i + offset` over spins `z ∈ {−1, +1}ⁿ`;
/// `J` is stored symmetric with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    couplings: Vec<f64>,
    fields: Vec<f64>,
    offset: f64,
}

impl IsingModel {
    pub fn nspins(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        debug_assert_eq!(spins.len(), self.n);
        let mut e = self.offset;
        for i in 0..self.n {
            let zi = f64::from(spins[i]);
            e += self.fields[i] * zi;
            for j in i + 1..self.n {
                e += self.couplings[i * self.n + j] * zi * f64::from(spins[j]);
            }
        }
        e
    }
}

/// Everything the solvers need about one instance.
#[derive(Debug, Clone)]
pub struct CostHamiltonian {
    pub encoding: Encoding,
    pub qubo: Qubo,
    pub observable: DiagonalObservable,
}

impl CostHamiltonian {
    pub fn nqubits(&self) -> usize {
        self.observable.nqubits()
    }
}

/// Random instance with an exact integer solution.
///
/// `D[i][j]` is uniform in `1..=9` for `j ≥ i` and zero below the diagonal;
/// each true slowness is uniform in `1..2^R`; `t = D s`.
pub fn synth_instance(nlayers: usize, bits: u32, seed: u64) -> Result<LayeredProblem> {
    let encoding = Encoding::new(nlayers, bits)?;
    let mut rng = rng::seeded(seed);
    let mut data = vec![0.0; nlayers * nlayers];
    for i in 0..nlayers {
        for j in i..nlayers {
            data[i * nlayers + j] = f64::from(rng.gen_range(1u32..=9));
        }
    }
    let slowness: Vec<u64> = (0..nlayers)
        .map(|_| rng.gen_range(1..encoding.limit()))
        .collect();
    let distances = DistanceMatrix::from_row_major(nlayers, data)?;
    let s: Vec<f64> = slowness.iter().map(|&v| v as f64).collect();
    let times = forward_times(&distances, &s)?;
    let mut problem = LayeredProblem::new(distances, times, bits, Some(slowness))?;
    problem.seed = Some(seed);
    Ok(problem)
}

/// Path length of the straight segment from `(0, source_depth)` to
/// `(offset, detector_depth)` inside each layer of a flat stack.
///
/// Layer `k` spans depths `[Σ_{j<k} h_j, Σ_{j≤k} h_j]`. The segment length
/// is shared out in proportion to each layer's vertical overlap with the
/// ray; a horizontal ray lies wholly in the layer containing its depth (the
/// upper layer when it runs along an interface, the last layer at the base).
pub fn straight_ray_distances(
    thicknesses: &[f64],
    source_depth: f64,
    detector_depth: f64,
    offset: f64,
) -> Result<Vec<f64>> {
    if thicknesses.is_empty() {
        return Err(Error::Geometry("at least one layer is required".into()));
    }
    if thicknesses.iter().any(|h| !h.is_finite() || *h <= 0.0) {
        return Err(Error::Geometry("layer thicknesses must be positive".into()));
    }
    if !offset.is_finite() || offset < 0.0 {
        return Err(Error::Geometry(
            "horizontal offset must be nonnegative".into(),
        ));
    }
    let mut tops = Vec::with_capacity(thicknesses.len() + 1);
    let mut depth = 0.0;
    tops.push(depth);
    for h in thicknesses {
        depth += h;
        tops.push(depth);
    }
    let bottom = depth;
    for (name, z) in [("source", source_depth), ("detector", detector_depth)] {
        if !(0.0..=bottom).contains(&z) {
            return Err(Error::Geometry(format!(
                "{name} depth {z} outside the layered column [0, {bottom}]"
            )));
        }
    }

    let mut out = vec![0.0; thicknesses.len()];
    let (lo, hi) = if source_depth <= detector_depth {
        (source_depth, detector_depth)
    } else {
        (detector_depth, source_depth)
    };
    let dz = hi - lo;
    if dz == 0.0 {
        let layer = (0..thicknesses.len())
            .find(|&k| lo <= tops[k + 1])
            .unwrap_or(thicknesses.len() - 1);
        out[layer] = offset;
        return Ok(out);
    }
    let length = offset.hypot(dz);
    for (k, d) in out.iter_mut().enumerate() {
        let overlap = hi.min(tops[k + 1]) - lo.max(tops[k]);
        if overlap > 0.0 {
            *d = length * overlap / dz;
        }
    }
    Ok(out)
}
