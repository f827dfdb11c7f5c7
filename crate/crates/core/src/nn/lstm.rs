//! Single-layer LSTM with a dense sigmoid read-out, trained by
//! backpropagation through time.
//!
//! Gate weights act on the concatenation `[h_{t-1}, x_t]`:
//!
//! ```text
//! f_t = sigmoid(W_f [h_{t-1}, x_t] + b_f)
//! i_t = sigmoid(W_i [h_{t-1}, x_t] + b_i)
//! g_t = tanh(W_c [h_{t-1}, x_t] + b_c)
//! o_t = sigmoid(W_o [h_{t-1}, x_t] + b_o)
//! c_t = f_t * c_{t-1} + i_t * g_t
//! h_t = o_t * act(c_t)          act = tanh (default) or softsign
//! y_t = sigmoid(W_y h_t + b_y)
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::activation::{sigmoid, softsign, softsign_grad};
use crate::nn::{init_uniform, mse_grad, Parameters};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CellActivation {
    #[default]
    Tanh,
    Softsign,
}

impl CellActivation {
    #[inline]
    fn apply(self, c: f64) -> f64 {
        match self {
            CellActivation::Tanh => c.tanh(),
            CellActivation::Softsign => softsign(c),
        }
    }

    #[inline]
    fn derivative(self, c: f64, a: f64) -> f64 {
        match self {
            CellActivation::Tanh => 1.0 - a * a,
            CellActivation::Softsign => softsign_grad(c),
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(CellActivation::Tanh),
            1 => Some(CellActivation::Softsign),
            _ => None,
        }
    }
}

impl std::str::FromStr for CellActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(CellActivation::Tanh),
            "softsign" => Ok(CellActivation::Softsign),
            _ => Err(Error::Parameter(format!(
                "unknown LSTM cell activation `{s}`"
            ))),
        }
    }
}

impl std::fmt::Display for CellActivation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellActivation::Tanh => "tanh",
            CellActivation::Softsign => "softsign",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lstm {
    pub units: usize,
    pub input_dim: usize,
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
    /// Read-out, `outputs x units`.
    pub w_y: Matrix,
    pub b_y: Vec<f64>,
    pub cell_activation: CellActivation,
}

/// Everything computed by one [`lstm_step`].
#[derive(Clone, Debug, PartialEq)]
pub struct LstmStep {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub candidate: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub y: Vec<f64>,
}

impl Lstm {
    pub fn zeros(
        input_dim: usize,
        units: usize,
        outputs: usize,
        cell_activation: CellActivation,
    ) -> Self {
        let gate = || Matrix::zeros(units, units + input_dim);
        Self {
            units,
            input_dim,
            w_f: gate(),
            w_i: gate(),
            w_c: gate(),
            w_o: gate(),
            b_f: vec![0.0; units],
            b_i: vec![0.0; units],
            b_c: vec![0.0; units],
            b_o: vec![0.0; units],
            w_y: Matrix::zeros(outputs, units),
            b_y: vec![0.0; outputs],
            cell_activation,
        }
    }

    pub fn new(
        input_dim: usize,
        units: usize,
        outputs: usize,
        cell_activation: CellActivation,
        rng: &mut impl Rng,
    ) -> Self {
        let mut cell = Self::zeros(input_dim, units, outputs, cell_activation);
        let fan_in = units + input_dim;
        for w in [&mut cell.w_f, &mut cell.w_i, &mut cell.w_c, &mut cell.w_o] {
            init_uniform(w.as_mut_slice(), fan_in, rng);
        }
        for b in [&mut cell.b_f, &mut cell.b_i, &mut cell.b_c, &mut cell.b_o] {
            init_uniform(b, fan_in, rng);
        }
        init_uniform(cell.w_y.as_mut_slice(), units, rng);
        init_uniform(&mut cell.b_y, units, rng);
        cell
    }

    pub fn outputs(&self) -> usize {
        self.w_y.rows()
    }

    pub fn zeros_like(&self) -> Lstm {
        Lstm::zeros(
            self.input_dim,
            self.units,
            self.outputs(),
            self.cell_activation,
        )
    }

    fn gates(&self) -> [(&Matrix, &[f64]); 4] {
        [
            (&self.w_f, &self.b_f),
            (&self.w_i, &self.b_i),
            (&self.w_c, &self.b_c),
            (&self.w_o, &self.b_o),
        ]
    }

    fn readout(&self, h: &[f64]) -> Vec<f64> {
        (0..self.outputs())
            .map(|k| sigmoid(self.b_y[k] + dot(self.w_y.row(k), h)))
            .collect()
    }

    /// Gate activations `[f, i, g, o]` for one step.
    fn gate_values(&self, x: &[f64], h_prev: &[f64]) -> [Vec<f64>; 4] {
        let u = self.units;
        let mut out: [Vec<f64>; 4] = Default::default();
        for (g, (w, b)) in self.gates().into_iter().enumerate() {
            out[g] = (0..u)
                .map(|j| {
                    let row = w.row(j);
                    let z = b[j] + dot(&row[..u], h_prev) + dot(&row[u..], x);
                    if g == 2 {
                        z.tanh()
                    } else {
                        sigmoid(z)
                    }
                })
                .collect();
        }
        out
    }

    fn check_sequence(&self, seq: &Matrix) -> Result<()> {
        if seq.rows() == 0 {
            return Err(Error::Parameter("LSTM input sequence is empty".into()));
        }
        if seq.cols() != self.input_dim {
            return Err(Error::Shape(format!(
                "LSTM expects {} features per step, got {}",
                self.input_dim,
                seq.cols()
            )));
        }
        Ok(())
    }

    pub fn forward_batch(&self, seqs: &[Matrix]) -> Result<Matrix> {
        let mut out = Matrix::zeros(seqs.len(), self.outputs());
        for (r, s) in seqs.iter().enumerate() {
            out.row_mut(r).copy_from_slice(&lstm_forward(self, s)?);
        }
        Ok(out)
    }

    /// Mean squared error over the batch and its gradient, unrolled through time.
    pub fn loss_and_grad(&self, seqs: &[Matrix], y: &Matrix) -> Result<(f64, Lstm)> {
        for s in seqs {
            self.check_sequence(s)?;
        }
        let u = self.units;
        let mut traces = Vec::with_capacity(seqs.len());
        let mut pred = Matrix::zeros(seqs.len(), self.outputs());
        for (r, seq) in seqs.iter().enumerate() {
            let trace = self.trace(seq);
            pred.row_mut(r)
                .copy_from_slice(&self.readout(&trace.last().unwrap().h));
            traces.push(trace);
        }
        let (loss, dpred) = mse_grad(&pred, y)?;

        let mut grad = self.zeros_like();
        let mut dz = vec![0.0; u + self.input_dim];
        for (r, (seq, trace)) in seqs.iter().zip(&traces).enumerate() {
            let h_last = &trace.last().unwrap().h;
            let mut dh = vec![0.0; u];
            for k in 0..self.outputs() {
                let yk = pred.get(r, k);
                let dzy = dpred.get(r, k) * yk * (1.0 - yk);
                grad.b_y[k] += dzy;
                for (j, gw) in grad.w_y.row_mut(k).iter_mut().enumerate() {
                    *gw += dzy * h_last[j];
                }
                for (j, d) in dh.iter_mut().enumerate() {
                    *d += dzy * self.w_y.get(k, j);
                }
            }
            let mut dc = vec![0.0; u];
            for t in (0..seq.rows()).rev() {
                let st = &trace[t];
                let zero = vec![0.0; u];
                let (h_prev, c_prev) = if t > 0 {
                    (&trace[t - 1].h, &trace[t - 1].c)
                } else {
                    (&zero, &zero)
                };
                let x = seq.row(t);
                let mut dgate: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; u]);
                for j in 0..u {
                    let a = self.cell_activation.apply(st.c[j]);
                    let d_o = dh[j] * a;
                    dc[j] += dh[j] * st.o[j] * self.cell_activation.derivative(st.c[j], a);
                    let d_f = dc[j] * c_prev[j];
                    let d_i = dc[j] * st.candidate[j];
                    let d_g = dc[j] * st.i[j];
                    dgate[0][j] = d_f * st.f[j] * (1.0 - st.f[j]);
                    dgate[1][j] = d_i * st.i[j] * (1.0 - st.i[j]);
                    dgate[2][j] = d_g * (1.0 - st.candidate[j] * st.candidate[j]);
                    dgate[3][j] = d_o * st.o[j] * (1.0 - st.o[j]);
                    dc[j] *= st.f[j];
                }
                dz.fill(0.0);
                let gw = [&mut grad.w_f, &mut grad.w_i, &mut grad.w_c, &mut grad.w_o];
                let gb = [&mut grad.b_f, &mut grad.b_i, &mut grad.b_c, &mut grad.b_o];
                for (g, ((w, _), (gw, gb))) in self
                    .gates()
                    .into_iter()
                    .zip(gw.into_iter().zip(gb))
                    .enumerate()
                {
                    for j in 0..u {
                        let d = dgate[g][j];
                        gb[j] += d;
                        let grow = gw.row_mut(j);
                        for (k, hv) in h_prev.iter().enumerate() {
                            grow[k] += d * hv;
                        }
                        for (k, xv) in x.iter().enumerate() {
                            grow[u + k] += d * xv;
                        }
                        for (dzk, wk) in dz.iter_mut().zip(w.row(j)) {
                            *dzk += d * wk;
                        }
                    }
                }
                dh.copy_from_slice(&dz[..u]);
            }
        }
        Ok((loss, grad))
    }

    /// Runs the sequence from a zero state, keeping every step.
    fn trace(&self, seq: &Matrix) -> Vec<LstmStep> {
        let mut h = vec![0.0; self.units];
        let mut c = vec![0.0; self.units];
        let mut steps = Vec::with_capacity(seq.rows());
        for t in 0..seq.rows() {
            let st = self.step_unchecked(seq.row(t), &h, &c, false);
            h.clone_from(&st.h);
            c.clone_from(&st.c);
            steps.push(st);
        }
        steps
    }

    fn step_unchecked(
        &self,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
        with_readout: bool,
    ) -> LstmStep {
        let [f, i, candidate, o] = self.gate_values(x, h_prev);
        let c: Vec<f64> = (0..self.units)
            .map(|j| f[j] * c_prev[j] + i[j] * candidate[j])
            .collect();
        let h: Vec<f64> = (0..self.units)
            .map(|j| o[j] * self.cell_activation.apply(c[j]))
            .collect();
        let y = if with_readout {
            self.readout(&h)
        } else {
            Vec::new()
        };
        LstmStep {
            f,
            i,
            candidate,
            o,
            c,
            h,
            y,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One recurrence step including the read-out `y_t`.
pub fn lstm_step(cell: &Lstm, x_t: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<LstmStep> {
    if x_t.len() != cell.input_dim || h_prev.len() != cell.units || c_prev.len() != cell.units {
        return Err(Error::Shape(format!(
            "LSTM step expects x of {} and state of {}, got {}, {}, {}",
            cell.input_dim,
            cell.units,
            x_t.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    Ok(cell.step_unchecked(x_t, h_prev, c_prev, true))
}

/// Unrolls the cell over `seq` (rows are time steps) from a zero state and
/// returns the read-out of the final hidden state.
pub fn lstm_forward(cell: &Lstm, seq: &Matrix) -> Result<Vec<f64>> {
    cell.check_sequence(seq)?;
    let trace = cell.trace(seq);
    Ok(cell.readout(&trace.last().unwrap().h))
}

impl Parameters for Lstm {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w_f.as_slice(),
            self.w_i.as_slice(),
            self.w_c.as_slice(),
            self.w_o.as_slice(),
            &self.b_f,
            &self.b_i,
            &self.b_c,
            &self.b_o,
            self.w_y.as_slice(),
            &self.b_y,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_f.as_mut_slice(),
            self.w_i.as_mut_slice(),
            self.w_c.as_mut_slice(),
            self.w_o.as_mut_slice(),
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_o,
            self.w_y.as_mut_slice(),
            &mut self.b_y,
        ]
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        let g = self.w_f.shape();
        let u = (self.units, 1);
        vec![
            g,
            g,
            g,
            g,
            u,
            u,
            u,
            u,
            self.w_y.shape(),
            (self.b_y.len(), 1),
        ]
    }
}
