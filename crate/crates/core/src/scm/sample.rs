use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Scm, ScmError};
use crate::parallel::Exec;

/// Rows per RNG stream. Chunk `c` draws from `ChaCha8(seed)` on stream `c`,
/// so the draws depend on the seed only, never on the thread count.
pub const CHUNK_ROWS: usize = 2048;

/// Exogenous draws for `n` rows: one noise value per variable plus one
/// uniform used to sample the binary label. Reusing the same draws across
/// interventions gives common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraws {
    n: usize,
    width: usize,
    /// Row-major, variables in declaration order.
    noise: Vec<f64>,
    label_uniform: Vec<f64>,
}

impl NoiseDraws {
    pub fn rows(&self) -> usize {
        self.n
    }

    /// Noise of row `r`, declaration order.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.noise[r * self.width..(r + 1) * self.width]
    }

    pub fn label_uniform(&self, r: usize) -> f64 {
        self.label_uniform[r]
    }
}

impl Scm {
    /// Draws the exogenous noise for `n` rows.
    pub fn draw_noise(&self, n: usize, seed: u64, exec: Exec) -> Result<NoiseDraws, ScmError> {
        if n == 0 {
            return Err(ScmError::EmptySample);
        }
        let width = self.len();
        let chunks = n.div_ceil(CHUNK_ROWS);
        let parts = exec.map_range(chunks, |c| {
            let start = c * CHUNK_ROWS;
            let rows = CHUNK_ROWS.min(n - start);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut noise = vec![0.0; rows * width];
            let mut uniforms = Vec::with_capacity(rows);
            for r in 0..rows {
                let row = &mut noise[r * width..(r + 1) * width];
                for &i in self.order_indices() {
                    row[i] = self.samplers()[i].draw(&mut rng);
                }
                uniforms.push(rng.random::<f64>());
            }
            (noise, uniforms)
        });
        let mut noise = Vec::with_capacity(n * width);
        let mut label_uniform = Vec::with_capacity(n);
        for (nz, u) in parts {
            noise.extend(nz);
            label_uniform.extend(u);
        }
        Ok(NoiseDraws { n, width, noise, label_uniform })
    }

    /// Samples `n` rows: noise first, then equations in topological order,
    /// then `Y_prob = σ(score)` and `Y_label ~ Bernoulli(Y_prob)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset, ScmError> {
        self.sample_with(n, seed, Exec::default())
    }

    pub fn sample_with(&self, n: usize, seed: u64, exec: Exec) -> Result<Dataset, ScmError> {
        let draws = self.draw_noise(n, seed, exec)?;
        Ok(self.dataset_from_draws(&draws, None, seed, exec))
    }

    /// Evaluates the SCM on existing draws, optionally with intercept shifts
    /// in declaration order.
    pub fn dataset_from_draws(
        &self,
        draws: &NoiseDraws,
        shifts: Option<&[f64]>,
        seed: u64,
        exec: Exec,
    ) -> Dataset {
        let width = self.len();
        let order = self.order_indices();
        let chunks = draws.rows().div_ceil(CHUNK_ROWS);
        let parts = exec.map_range(chunks, |c| {
            let start = c * CHUNK_ROWS;
            let end = (start + CHUNK_ROWS).min(draws.rows());
            let mut values = Vec::with_capacity((end - start) * width);
            let mut noise = Vec::with_capacity((end - start) * width);
            let mut probs = Vec::with_capacity(end - start);
            let mut labels = Vec::with_capacity(end - start);
            let mut x = vec![0.0; width];
            for r in start..end {
                let u = draws.row(r);
                self.evaluate_into(u, shifts, &mut x);
                let pred = self.predict_values(&x);
                values.extend(order.iter().map(|&i| x[i]));
                noise.extend(order.iter().map(|&i| u[i]));
                probs.push(pred.probability);
                labels.push(u8::from(draws.label_uniform(r) < pred.probability));
            }
            (values, noise, probs, labels)
        });
        let mut ds = Dataset {
            columns: self.topological_order().into_iter().map(String::from).collect(),
            values: Vec::with_capacity(draws.rows() * width),
            noise: Vec::with_capacity(draws.rows() * width),
            y_prob: Vec::with_capacity(draws.rows()),
            y_label: Vec::with_capacity(draws.rows()),
            seed,
        };
        for (v, nz, p, l) in parts {
            ds.values.extend(v);
            ds.noise.extend(nz);
            ds.y_prob.extend(p);
            ds.y_label.extend(l);
        }
        ds
    }
}

/// Sampled rows. Variable columns are in topological order, followed by the
/// target probability and the sampled label. The noise draws behind every
/// row are kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    values: Vec<f64>,
    noise: Vec<f64>,
    pub y_prob: Vec<f64>,
    pub y_label: Vec<u8>,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_prob.is_empty()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Variable values of row `r`, in column order.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.width()..(r + 1) * self.width()]
    }

    /// Noise draws of row `r`, in column order.
    pub fn noise_row(&self, r: usize) -> &[f64] {
        &self.noise[r * self.width()..(r + 1) * self.width()]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some((0..self.len()).map(|r| self.row(r)[j]).collect())
    }

    pub fn instance(&self, r: usize) -> super::Instance {
        self.columns.iter().map(String::as_str).zip(self.row(r).iter().copied()).collect()
    }

    pub fn mean_probability(&self) -> f64 {
        self.y_prob.iter().sum::<f64>() / self.len() as f64
    }

    /// Writes the dataset as CSV with a `# seed=…` comment line first.
    /// Floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# seed={} n={}", self.seed, self.len())?;
        writeln!(w, "{},Y_prob,Y_label", self.columns.join(","))?;
        let mut line = String::new();
        for r in 0..self.len() {
            line.clear();
            for v in self.row(r) {
                line.push_str(&format_float(*v));
                line.push(',');
            }
            line.push_str(&format_float(self.y_prob[r]));
            line.push(',');
            line.push_str(if self.y_label[r] == 1 { "1" } else { "0" });
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits (round-trips any f64).
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{NoiseSpec, StructuralEquation, TargetSpec, Variable};

    fn normal_root() -> Scm {
        Scm::new(
            vec![Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::standard_normal())],
            TargetSpec::new(&[("X", 1.0)]),
        )
        .unwrap()
    }

    #[test]
    fn zero_rows_rejected() {
        assert_eq!(normal_root().sample(0, 1), Err(ScmError::EmptySample));
    }

    #[test]
    fn standard_normal_mean() {
        let ds = normal_root().sample(100_000, 7).unwrap();
        let mean = ds.column("X").unwrap().iter().sum::<f64>() / 1e5;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn sequential_and_parallel_are_bit_identical() {
        let scm = normal_root();
        let a = scm.sample_with(5 * CHUNK_ROWS + 17, 3, Exec::Sequential).unwrap();
        let b = scm.sample_with(5 * CHUNK_ROWS + 17, 3, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn prefix_stability() {
        // Row r depends only on (seed, r), not on n.
        let scm = normal_root();
        let short = scm.sample(100, 9).unwrap();
        let long = scm.sample(3 * CHUNK_ROWS, 9).unwrap();
        for r in 0..100 {
            assert_eq!(short.row(r), long.row(r));
        }
    }

    #[test]
    fn csv_layout() {
        let ds = normal_root().sample(2, 1).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# seed=1 n=2");
        assert_eq!(lines[1], "X,Y_prob,Y_label");
        assert_eq!(lines.len(), 4);
        let first: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
        assert_eq!(first, ds.row(0)[0]);
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
    }
}
