//! Two-dimensional TMz Yee solver with a convolutional PML.
//!
//! Field layout, with `i` along x and `j` along y (upward), flat index `j*nx + i`:
//! * `ez[i, j]` at node `(i, j)`
//! * `hx[i, j]` at `(i, j + 1/2)`
//! * `hy[i, j]` at `(i + 1/2, j)`
//!
//! The outermost ring of `ez` is held at zero, so the PML is backed by a
//! perfect conductor. The PML uses a polynomial conductivity profile, unit
//! stretching and a linearly decaying frequency shift; its auxiliary fields
//! live only in the four strips, the interior runs the plain Yee update.

use crate::error::{Error, Result};
use crate::physics::{ricker, EPS0, ETA0, MU0};

use super::scene::{courant_dt, Medium, Scene};

/// Field storage precision. Single precision halves memory traffic, which
/// dominates the update cost, and is ample for the dynamic range involved.
type Real = f32;

const PML_ORDER: f64 = 4.0;
const PML_R0: f64 = 1e-6;

/// Auxiliary fields of the PML for one field component, stored as runs of
/// consecutive grid indices so the updates work on contiguous slices.
struct Strip {
    /// `(first flat index, offset into psi/b/c, length)`
    runs: Vec<(usize, usize, usize)>,
    b: Vec<Real>,
    c: Vec<Real>,
    psi: Vec<Real>,
}

impl Strip {
    fn new() -> Self {
        Strip { runs: Vec::new(), b: Vec::new(), c: Vec::new(), psi: Vec::new() }
    }

    fn push(&mut self, idx: usize, (b, c): (f64, f64)) {
        if c == 0.0 {
            return;
        }
        match self.runs.last_mut() {
            Some((start, _, len)) if *start + *len == idx => *len += 1,
            _ => self.runs.push((idx, self.psi.len(), 1)),
        }
        self.b.push(b as Real);
        self.c.push(c as Real);
        self.psi.push(0.0);
    }

    /// For every cell `k` of the strip: `psi = b*psi + c*(f[k + hi] - f[k - lo])`,
    /// then `out[k] += scale(k) * psi`.
    fn apply(&mut self, field: &[Real], lo: usize, hi: usize, out: &mut [Real], scale: &[Real], sign: Real) {
        for &(start, off, len) in &self.runs {
            let psi = &mut self.psi[off..off + len];
            let b = &self.b[off..off + len];
            let c = &self.c[off..off + len];
            let f_hi = &field[start + hi..start + hi + len];
            let f_lo = &field[start - lo..start - lo + len];
            let o = &mut out[start..start + len];
            let sc = &scale[start..start + len];
            for i in 0..len {
                psi[i] = b[i] * psi[i] + c[i] * (f_hi[i] - f_lo[i]);
                o[i] += sign * sc[i] * psi[i];
            }
        }
    }
}

/// A running simulation of a single shot.
pub struct Simulation {
    nx: usize,
    ny: usize,
    dt: f64,
    dx: f64,
    ez: Vec<Real>,
    hx: Vec<Real>,
    hy: Vec<Real>,
    /// Per-node update coefficients.
    ca: Vec<Real>,
    cb: Vec<Real>,
    eps_node: Vec<f64>,
    /// Constant `dt/(mu0*dx)` for every cell, shared by the magnetic PML terms.
    h_scale: Vec<Real>,
    ez_x: Strip,
    ez_y: Strip,
    hy_x: Strip,
    hx_y: Strip,
    src: usize,
    rx: usize,
    source: crate::physics::RickerSpec,
    step: usize,
}

impl Simulation {
    /// Prepares the grid for shot `shot` of `scene`.
    pub fn new(scene: &Scene, shot: usize) -> Result<Self> {
        scene.validate()?;
        if shot >= scene.survey.n_shots {
            return Err(Error::validation("shot_index", format!("{shot} >= n_shots {}", scene.survey.n_shots)));
        }
        let g = &scene.grid;
        let p = g.pml_cells;
        let nx = g.cells_x() + 1 + 2 * p;
        let ny = g.cells_y() + 1 + 2 * p;
        let d = g.spacing;
        let dt = courant_dt(g);
        let pos = |i: usize, j: usize| ((i as f64 - p as f64) * d, (j as f64 - p as f64) * d);

        // Node media: area average over the cell around each node.
        let mut ca: Vec<Real> = vec![0.0; nx * ny];
        let mut cb: Vec<Real> = vec![0.0; nx * ny];
        let mut eps_node = vec![1.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = pos(i, j);
                let medium = scene.cell_average(x, y, d);
                let boundary = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                let medium = if boundary { Medium::Pec } else { medium };
                let (ca_k, cb_k) = match medium {
                    Medium::Pec => (0.0, 0.0),
                    Medium::Dielectric { eps_r, sigma } => {
                        let eps = eps_r * EPS0;
                        let loss = sigma * dt / (2.0 * eps);
                        ((1.0 - loss) / (1.0 + loss), dt / (eps * d) / (1.0 + loss))
                    }
                };
                ca[j * nx + i] = ca_k as Real;
                cb[j * nx + i] = cb_k as Real;
                if let Medium::Dielectric { eps_r, .. } = medium {
                    eps_node[j * nx + i] = eps_r;
                }
            }
        }

        // PML coefficients. `depth` is the normalised distance into the layer
        // (0 at the inner face, 1 at the outer wall).
        let thickness = p as f64 * d;
        let alpha_max = std::f64::consts::PI * EPS0 * scene.source.fc;
        let pml_coef = |depth: f64, eps_r: f64| -> (f64, f64) {
            if depth <= 0.0 {
                return (1.0, 0.0);
            }
            let sigma_max = -(PML_ORDER + 1.0) * PML_R0.ln() / (2.0 * ETA0 * thickness * eps_r.sqrt());
            let sigma = sigma_max * depth.powf(PML_ORDER);
            let alpha = alpha_max * (1.0 - depth);
            let b = (-(sigma + alpha) * dt / EPS0).exp();
            let c = if sigma > 0.0 { sigma / (sigma + alpha) * (b - 1.0) } else { 0.0 };
            (b, c)
        };
        let depth_at = |u: f64, n: usize| -> f64 {
            // u is a node coordinate in cells (may be half-integer), n nodes along the axis.
            let lo = p as f64 - u;
            let hi = u - (n - 1 - p) as f64;
            (lo.max(hi) / p as f64).clamp(0.0, 1.0)
        };

        let mut ez_x = Strip::new();
        let mut ez_y = Strip::new();
        let mut hy_x = Strip::new();
        let mut hx_y = Strip::new();
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                let e = eps_node[k];
                ez_x.push(k, pml_coef(depth_at(i as f64, nx), e));
                ez_y.push(k, pml_coef(depth_at(j as f64, ny), e));
            }
        }
        for j in 0..ny {
            for i in 0..nx - 1 {
                let k = j * nx + i;
                let e = 0.5 * (eps_node[k] + eps_node[k + 1]);
                hy_x.push(k, pml_coef(depth_at(i as f64 + 0.5, nx), e));
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let k = j * nx + i;
                let e = 0.5 * (eps_node[k] + eps_node[k + nx]);
                hx_y.push(k, pml_coef(depth_at(j as f64 + 0.5, ny), e));
            }
        }

        // The receiver keeps a fixed offset in cells from the transmitter so the
        // direct wave is the same at every shot position.
        let y_ant = scene.antenna_y();
        let j = (y_ant / d).round() as usize + p;
        let tx_x = scene.survey.tx_x(shot);
        let i_tx = (tx_x / d).round() as i64;
        let offset = ((scene.survey.rx_x(shot) - tx_x) / d).round() as i64;
        let i_rx = (i_tx + offset).clamp(0, (nx - 1 - 2 * p) as i64);
        let src = j * nx + i_tx as usize + p;
        let rx = j * nx + i_rx as usize + p;

        Ok(Simulation {
            nx,
            ny,
            dt,
            dx: d,
            ez: vec![0.0; nx * ny],
            hx: vec![0.0; nx * ny],
            hy: vec![0.0; nx * ny],
            ca,
            cb,
            eps_node,
            h_scale: vec![(dt / (MU0 * d)) as Real; nx * ny],
            ez_x,
            ez_y,
            hy_x,
            hx_y,
            src,
            rx,
            source: scene.source,
            step: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grid size in nodes, including the absorbing layer.
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Advances one time step and returns the field at the receiver.
    pub fn step(&mut self) -> Result<f64> {
        let nx = self.nx;
        let ny = self.ny;
        let ch = (self.dt / (MU0 * self.dx)) as Real;

        // Magnetic field.
        for j in 0..ny - 1 {
            let row = j * nx;
            let (ez0, ez1) = self.ez[row..row + 2 * nx].split_at(nx);
            let hx = &mut self.hx[row..row + nx];
            for ((h, a), b) in hx.iter_mut().zip(ez0).zip(ez1) {
                *h -= ch * (b - a);
            }
        }
        for j in 0..ny {
            let row = j * nx;
            let ez = &self.ez[row..row + nx];
            let hy = &mut self.hy[row..row + nx - 1];
            for (h, w) in hy.iter_mut().zip(ez.windows(2)) {
                *h += ch * (w[1] - w[0]);
            }
        }
        self.hy_x.apply(&self.ez, 0, 1, &mut self.hy, &self.h_scale, 1.0);
        self.hx_y.apply(&self.ez, 0, nx, &mut self.hx, &self.h_scale, -1.0);

        // Electric field.
        let mut lanes: [Real; 4] = [0.0; 4];
        for j in 1..ny - 1 {
            let row = j * nx;
            let (hx_lo, hx_hi) = self.hx[row - nx..row + nx].split_at(nx);
            let hy = &self.hy[row..row + nx];
            let ca = &self.ca[row + 1..row + nx - 1];
            let cb = &self.cb[row + 1..row + nx - 1];
            let ez = &mut self.ez[row + 1..row + nx - 1];
            let it = ez
                .iter_mut()
                .zip(ca.iter().zip(cb))
                .zip(hy.windows(2).zip(hx_hi[1..].iter().zip(&hx_lo[1..])));
            for ((e, (a, b)), (w, (h1, h0))) in it {
                *e = a * *e + b * ((w[1] - w[0]) - (h1 - h0));
            }
            let chunks = ez.chunks_exact(4);
            lanes[0] += chunks.remainder().iter().sum::<Real>();
            for c in chunks {
                for (l, v) in lanes.iter_mut().zip(c) {
                    *l += v;
                }
            }
        }
        let check = lanes.iter().sum::<Real>();
        self.ez_x.apply(&self.hy, 1, 0, &mut self.ez, &self.cb, 1.0);
        self.ez_y.apply(&self.hx, nx, 0, &mut self.ez, &self.cb, -1.0);

        // Soft source.
        let t = self.step as f64 * self.dt;
        self.ez[self.src] += ricker(t, &self.source) as Real;

        if !check.is_finite() || !self.ez[self.rx].is_finite() {
            return Err(Error::Simulation { step: self.step });
        }
        self.step += 1;
        Ok(self.ez[self.rx] as f64)
    }

    /// Electromagnetic energy per unit length stored in the grid (J/m).
    pub fn energy(&self) -> f64 {
        let a = self.dx * self.dx;
        let mut e = 0.0;
        for k in 0..self.ez.len() {
            let (ez, hx, hy) = (self.ez[k] as f64, self.hx[k] as f64, self.hy[k] as f64);
            e += 0.5 * EPS0 * self.eps_node[k] * ez * ez;
            e += 0.5 * MU0 * (hx * hx + hy * hy);
        }
        e * a
    }

    /// Electric field at node `(i, j)`.
    #[doc(hidden)]
    pub fn ez_at(&self, i: usize, j: usize) -> f64 {
        self.ez[j * self.nx + i] as f64
    }
}
