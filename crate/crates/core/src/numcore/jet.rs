//! Derivative-jet propagation through an [`Mlp`].
//!
//! A "jet" carries, for a batch of input points, the network outputs together
//! with their first derivatives and per-coordinate second derivatives with
//! respect to the inputs. PDE residuals are algebraic functions of the jet, so
//! training a physics-informed network needs one more ingredient: the reverse
//! pass of the jet propagation itself, which turns residual cotangents into
//! exact parameter gradients. Both passes live here.
//!
//! Layout: a batch of `B` points with input dimension `d` stores values as
//! `out x B` and derivative blocks as `out x (d*B)`, where column `p*d + j`
//! holds the derivative with respect to input coordinate `j` at point `p`.

use ndarray::{Array2, ArrayView2, Axis};

use super::mlp::Mlp;
use crate::error::{Error, Result};

/// Outputs and exact input derivatives for a batch of points.
pub struct JetBatch {
    /// Network outputs, `out x B`.
    pub values: Array2<f64>,
    /// First derivatives, `out x (d*B)`; column `p*d + j` is d out/d x_j at point p.
    pub jacobian: Array2<f64>,
    /// Per-coordinate second derivatives, same layout as `jacobian`.
    pub second: Array2<f64>,
}

/// Cotangents for a [`JetBatch`], same shapes.
pub struct JetCotangent {
    pub values: Array2<f64>,
    pub jacobian: Array2<f64>,
    pub second: Array2<f64>,
}

impl JetCotangent {
    pub fn zeros_like(jet: &JetBatch) -> Self {
        Self {
            values: Array2::zeros(jet.values.raw_dim()),
            jacobian: Array2::zeros(jet.jacobian.raw_dim()),
            second: Array2::zeros(jet.second.raw_dim()),
        }
    }
}

/// Intermediate per-layer state saved by the traced forward pass.
pub struct JetTrace {
    d: usize,
    batch: usize,
    /// Post-activation values per layer, `acts[0]` = inputs.
    acts: Vec<Array2<f64>>,
    /// First-derivative blocks per layer, `jacs[0]` = identity blocks.
    jacs: Vec<Array2<f64>>,
    /// Second-derivative blocks per layer, `secs[0]` = zeros.
    secs: Vec<Array2<f64>>,
    /// Pre-activation derivative blocks for hidden layers (indexed by layer - 1).
    pre_jacs: Vec<Array2<f64>>,
    pre_secs: Vec<Array2<f64>>,
}

/// Scale each derivative-block column by a per-point factor row: out[i, p*d+j] *= f[i, p].
fn scale_blocks(dst: &mut Array2<f64>, factors: &Array2<f64>, d: usize) {
    let n = dst.nrows();
    let b = factors.ncols();
    let dsts = dst.as_slice_mut().expect("standard layout");
    let fs = factors.as_slice().expect("standard layout");
    for i in 0..n {
        let row = &mut dsts[i * d * b..(i + 1) * d * b];
        let frow = &fs[i * b..(i + 1) * b];
        for p in 0..b {
            let f = frow[p];
            for v in &mut row[p * d..(p + 1) * d] {
                *v *= f;
            }
        }
    }
}

impl Mlp {
    /// Propagate value/first/second derivative jets through the network.
    pub fn jet_batch(&self, inputs: ArrayView2<f64>) -> Result<JetBatch> {
        let (jet, _) = self.jet_batch_traced(inputs)?;
        Ok(jet)
    }

    /// Like [`Mlp::jet_batch`] but also returns the trace needed by
    /// [`Mlp::jet_backprop`].
    pub fn jet_batch_traced(&self, inputs: ArrayView2<f64>) -> Result<(JetBatch, JetTrace)> {
        let d = self.input_dim();
        if inputs.nrows() != d {
            return Err(Error::DimensionMismatch(format!(
                "jet input rows {} != network input size {d}",
                inputs.nrows()
            )));
        }
        let b = inputs.ncols();
        let n_layers = self.layers.len();

        // J_0: per-point identity blocks; S_0: zeros.
        let mut j0 = Array2::zeros((d, d * b));
        for p in 0..b {
            for j in 0..d {
                j0[(j, p * d + j)] = 1.0;
            }
        }
        let mut trace = JetTrace {
            d,
            batch: b,
            acts: vec![inputs.to_owned()],
            jacs: vec![j0],
            secs: vec![Array2::zeros((d, d * b))],
            pre_jacs: Vec::new(),
            pre_secs: Vec::new(),
        };

        for (k, l) in self.layers.iter().enumerate() {
            let mut z = l.w.dot(trace.acts.last().unwrap());
            z += &l.b.view().insert_axis(Axis(1));
            let p_blk = l.w.dot(trace.jacs.last().unwrap());
            let q_blk = l.w.dot(trace.secs.last().unwrap());
            if k + 1 < n_layers {
                z.mapv_inplace(f64::tanh);
                let a = z; // post-activation
                let d1 = a.mapv(|v| 1.0 - v * v);
                // J = d1 .* P ; S = d2 .* P^2 + d1 .* Q with d2 = -2 a d1.
                let mut jac = p_blk.clone();
                scale_blocks(&mut jac, &d1, d);
                let d2 = ndarray::Zip::from(&a).and(&d1).map_collect(|&av, &dv| -2.0 * av * dv);
                let mut sec = p_blk.mapv(|v| v * v);
                scale_blocks(&mut sec, &d2, d);
                let mut qd = q_blk.clone();
                scale_blocks(&mut qd, &d1, d);
                sec += &qd;
                trace.pre_jacs.push(p_blk);
                trace.pre_secs.push(q_blk);
                trace.acts.push(a);
                trace.jacs.push(jac);
                trace.secs.push(sec);
            } else {
                trace.acts.push(z);
                trace.jacs.push(p_blk);
                trace.secs.push(q_blk);
            }
        }

        let jet = JetBatch {
            values: trace.acts.last().unwrap().clone(),
            jacobian: trace.jacs.last().unwrap().clone(),
            second: trace.secs.last().unwrap().clone(),
        };
        Ok((jet, trace))
    }

    /// Reverse pass of the jet propagation: turns cotangents on (values,
    /// jacobian, second) into the flat parameter gradient.
    pub fn jet_backprop(&self, trace: &JetTrace, cot: &JetCotangent) -> Result<Vec<f64>> {
        let n_layers = self.layers.len();
        let d = trace.d;
        let b = trace.batch;
        if cot.values.ncols() != b || cot.jacobian.ncols() != d * b {
            return Err(Error::DimensionMismatch(
                "jet cotangent batch does not match trace".into(),
            ));
        }

        // At the (linear) output layer the cotangents pass straight to the
        // pre-activation quantities.
        let mut z_bar = cot.values.clone();
        let mut p_bar = cot.jacobian.clone();
        let mut q_bar = cot.second.clone();

        let mut grads: Vec<(Array2<f64>, ndarray::Array1<f64>)> = Vec::with_capacity(n_layers);

        for k in (0..n_layers).rev() {
            // Parameter gradients: z = W a + b, P = W J, Q = W S.
            let mut w_bar = z_bar.dot(&trace.acts[k].t());
            w_bar += &p_bar.dot(&trace.jacs[k].t());
            w_bar += &q_bar.dot(&trace.secs[k].t());
            let b_bar = z_bar.sum_axis(Axis(1));
            grads.push((w_bar, b_bar));

            if k == 0 {
                break;
            }

            // Cotangents w.r.t. the previous layer's outputs.
            let wt = self.layers[k].w.t();
            let a_bar = wt.dot(&z_bar);
            let j_bar = wt.dot(&p_bar);
            let s_bar = wt.dot(&q_bar);

            // Previous layer k-1 is hidden (tanh). Convert cotangents on its
            // outputs (a, J, S) into cotangents on its pre-activations (z, P, Q).
            let a = &trace.acts[k]; // post-activation of layer k-1... (acts[k] is layer k's input)
            let p_blk = &trace.pre_jacs[k - 1];
            let q_blk = &trace.pre_secs[k - 1];
            let n = a.nrows();

            let mut zb = Array2::zeros((n, b));
            let mut pb = Array2::zeros((n, d * b));
            let mut qb = Array2::zeros((n, d * b));
            {
                let asl = a.as_slice().unwrap();
                let ps = p_blk.as_slice().unwrap();
                let qs = q_blk.as_slice().unwrap();
                let jbs = j_bar.as_slice().unwrap();
                let sbs = s_bar.as_slice().unwrap();
                let abs_ = a_bar.as_slice().unwrap();
                let zbs = zb.as_slice_mut().unwrap();
                let pbs = pb.as_slice_mut().unwrap();
                let qbs = qb.as_slice_mut().unwrap();
                for i in 0..n {
                    for p in 0..b {
                        let av = asl[i * b + p];
                        let d1 = 1.0 - av * av;
                        let d2 = -2.0 * av * d1;
                        let d3 = d1 * (6.0 * av * av - 2.0);
                        let mut acc = abs_[i * b + p] * d1;
                        let base = i * d * b + p * d;
                        for j in 0..d {
                            let c = base + j;
                            let pv = ps[c];
                            let qv = qs[c];
                            let jb = jbs[c];
                            let sb = sbs[c];
                            acc += jb * d2 * pv + sb * (d3 * pv * pv + d2 * qv);
                            pbs[c] = jb * d1 + sb * 2.0 * d2 * pv;
                            qbs[c] = sb * d1;
                        }
                        zbs[i * b + p] = acc;
                    }
                }
            }
            z_bar = zb;
            p_bar = pb;
            q_bar = qb;
        }

        grads.reverse();
        let mut flat = Vec::with_capacity(self.param_count());
        for (w, bv) in &grads {
            flat.extend(w.iter());
            flat.extend(bv.iter());
        }
        Ok(flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tanh_unit_has_analytic_derivatives() {
        // Net computing tanh(x): 1-1-1 with unit weights, zero biases.
        let mut net = Mlp::zeros(&[1, 1, 1]).unwrap();
        net.set_params(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        for &x in &[-1.3, -0.2, 0.0, 0.7, 2.1] {
            let d = net.input_derivatives(&[x]).unwrap();
            let t = x.tanh();
            let want_j = 1.0 - t * t;
            let want_s = -2.0 * t * (1.0 - t * t);
            assert!((d.jacobian[(0, 0)] - want_j).abs() < 1e-12);
            assert!((d.second[(0, 0)] - want_s).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_net_jacobian_is_weight_product_and_second_zero() {
        let mut net = Mlp::zeros(&[2, 2]).unwrap();
        net.set_params(&[1.0, 2.0, 3.0, 4.0, 0.1, 0.2]).unwrap();
        let d = net.input_derivatives(&[0.5, -0.5]).unwrap();
        assert_eq!(d.jacobian[(0, 0)], 1.0);
        assert_eq!(d.jacobian[(0, 1)], 2.0);
        assert_eq!(d.jacobian[(1, 0)], 3.0);
        assert_eq!(d.jacobian[(1, 1)], 4.0);
        assert!(d.second.iter().all(|&v| v == 0.0));
    }

    fn fd_jacobian(net: &Mlp, x: &[f64], h: f64) -> Array2<f64> {
        let out = net.output_dim();
        let mut jac = Array2::zeros((out, x.len()));
        for j in 0..x.len() {
            let mut xp = x.to_vec();
            xp[j] += h;
            let mut xm = x.to_vec();
            xm[j] -= h;
            let fp = net.forward(&xp).unwrap();
            let fm = net.forward(&xm).unwrap();
            for i in 0..out {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    fn fd_second(net: &Mlp, x: &[f64], h: f64) -> Array2<f64> {
        let out = net.output_dim();
        let f0 = net.forward(x).unwrap();
        let mut sec = Array2::zeros((out, x.len()));
        for j in 0..x.len() {
            let mut xp = x.to_vec();
            xp[j] += h;
            let mut xm = x.to_vec();
            xm[j] -= h;
            let fp = net.forward(&xp).unwrap();
            let fm = net.forward(&xm).unwrap();
            for i in 0..out {
                sec[(i, j)] = (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h);
            }
        }
        sec
    }

    #[test]
    fn jet_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..4u64 {
            let net = Mlp::xavier(&[3, 9, 7, 2], seed).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d = net.input_derivatives(&x).unwrap();
            let jac_fd = fd_jacobian(&net, &x, 1e-5);
            let sec_fd = fd_second(&net, &x, 1e-4);
            for (g, w) in d.jacobian.iter().zip(jac_fd.iter()) {
                assert!((g - w).abs() / w.abs().max(1e-4) < 1e-3, "jac {g} vs {w}");
            }
            for (g, w) in d.second.iter().zip(sec_fd.iter()) {
                assert!((g - w).abs() / w.abs().max(1e-3) < 1e-3, "sec {g} vs {w}");
            }
        }
    }

    #[test]
    fn jet_backprop_matches_finite_differences() {
        // Scalar functional linear in the jet with fixed random cotangents;
        // its parameter gradient must match central differences.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = Mlp::xavier(&[2, 8, 6, 3], 11).unwrap();
        let b = 4;
        let inputs = Array2::from_shape_fn((2, b), |_| rng.gen_range(-1.0..1.0));
        let (jet, trace) = net.jet_batch_traced(inputs.view()).unwrap();
        let cot = JetCotangent {
            values: Array2::from_shape_fn(jet.values.raw_dim(), |_| rng.gen_range(-1.0..1.0)),
            jacobian: Array2::from_shape_fn(jet.jacobian.raw_dim(), |_| rng.gen_range(-1.0..1.0)),
            second: Array2::from_shape_fn(jet.second.raw_dim(), |_| rng.gen_range(-1.0..1.0)),
        };
        let got = net.jet_backprop(&trace, &cot).unwrap();

        let loss = |p: &[f64]| -> f64 {
            let n = Mlp::from_params(net.layer_sizes(), p).unwrap();
            let j = n.jet_batch(inputs.view()).unwrap();
            let mut acc = 0.0;
            acc += (&j.values * &cot.values).sum();
            acc += (&j.jacobian * &cot.jacobian).sum();
            acc += (&j.second * &cot.second).sum();
            acc
        };
        let base = net.params();
        let h = 1e-5;
        for i in (0..base.len()).step_by(7) {
            let mut pp = base.clone();
            pp[i] += h;
            let mut pm = base.clone();
            pm[i] -= h;
            let fd = (loss(&pp) - loss(&pm)) / (2.0 * h);
            let denom = fd.abs().max(1e-5);
            assert!(
                (got[i] - fd).abs() / denom < 1e-5,
                "param {i}: grad {} vs fd {fd}",
                got[i]
            );
        }
    }

    #[test]
    fn batched_jet_matches_per_point() {
        let net = Mlp::xavier(&[3, 8, 4], 23).unwrap();
        let pts = [[0.1, -0.4, 0.9], [1.2, 0.3, -0.6]];
        let mut inputs = Array2::zeros((3, 2));
        for (p, pt) in pts.iter().enumerate() {
            for (j, v) in pt.iter().enumerate() {
                inputs[(j, p)] = *v;
            }
        }
        let jet = net.jet_batch(inputs.view()).unwrap();
        for (p, pt) in pts.iter().enumerate() {
            let single = net.input_derivatives(pt).unwrap();
            for i in 0..4 {
                for j in 0..3 {
                    assert!((jet.jacobian[(i, p * 3 + j)] - single.jacobian[(i, j)]).abs() < 1e-14);
                    assert!((jet.second[(i, p * 3 + j)] - single.second[(i, j)]).abs() < 1e-14);
                }
            }
        }
    }
}
