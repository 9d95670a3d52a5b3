//! Dense-array kernels with explicit shapes. Activations are channel-major:
//! 1-D `[c, t]`, 2-D `[c, h, w]`. All kernels use valid (unpadded) windows.

pub(crate) fn out_len(n: usize, kernel: usize, stride: usize) -> usize {
    if n < kernel {
        0
    } else {
        (n - kernel) / stride + 1
    }
}

pub(crate) fn conv1d_forward(
    x: &[f64],
    c_in: usize,
    t_in: usize,
    w: &[f64],
    b: &[f64],
    k: usize,
    s: usize,
) -> (Vec<f64>, usize) {
    let c_out = b.len();
    let t_out = out_len(t_in, k, s);
    let mut y = vec![0.0; c_out * t_out];
    for (o, yo) in y.chunks_exact_mut(t_out.max(1)).enumerate().take(c_out) {
        yo.fill(b[o]);
        for i in 0..c_in {
            let xi = &x[i * t_in..(i + 1) * t_in];
            for j in 0..k {
                let wv = w[(o * c_in + i) * k + j];
                for (yv, xv) in yo.iter_mut().zip(xi[j..].iter().step_by(s)) {
                    *yv += wv * xv;
                }
            }
        }
    }
    (y, t_out)
}

/// Accumulates `dw`, `db`; returns `dx` when requested.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_backward(
    x: &[f64],
    c_in: usize,
    t_in: usize,
    w: &[f64],
    k: usize,
    s: usize,
    dy: &[f64],
    t_out: usize,
    dw: &mut [f64],
    db: &mut [f64],
    need_dx: bool,
) -> Option<Vec<f64>> {
    let c_out = db.len();
    let mut dx = need_dx.then(|| vec![0.0; c_in * t_in]);
    for o in 0..c_out {
        let dyo = &dy[o * t_out..(o + 1) * t_out];
        db[o] += dyo.iter().sum::<f64>();
        for i in 0..c_in {
            let xi = &x[i * t_in..(i + 1) * t_in];
            for j in 0..k {
                let widx = (o * c_in + i) * k + j;
                let acc: f64 = dyo.iter().zip(xi[j..].iter().step_by(s)).map(|(g, xv)| g * xv).sum();
                dw[widx] += acc;
                if let Some(dx) = dx.as_mut() {
                    let wv = w[widx];
                    let dxi = &mut dx[i * t_in..(i + 1) * t_in];
                    for (dxv, g) in dxi[j..].iter_mut().step_by(s).zip(dyo) {
                        *dxv += wv * g;
                    }
                }
            }
        }
    }
    dx
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Conv2dGeom {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
    pub k: usize,
    pub s: usize,
}

impl Conv2dGeom {
    pub fn out_hw(&self) -> (usize, usize) {
        (out_len(self.h, self.k, self.s), out_len(self.w, self.k, self.s))
    }
}

pub(crate) fn conv2d_forward(x: &[f64], g: Conv2dGeom, w: &[f64], b: &[f64]) -> Vec<f64> {
    let (ho, wo) = g.out_hw();
    let mut y = vec![0.0; g.c_out * ho * wo];
    for o in 0..g.c_out {
        let yo = &mut y[o * ho * wo..(o + 1) * ho * wo];
        yo.fill(b[o]);
        for i in 0..g.c_in {
            let xi = &x[i * g.h * g.w..(i + 1) * g.h * g.w];
            for kh in 0..g.k {
                for kw in 0..g.k {
                    let wv = w[((o * g.c_in + i) * g.k + kh) * g.k + kw];
                    for r in 0..ho {
                        let xrow = &xi[(r * g.s + kh) * g.w + kw..];
                        let yrow = &mut yo[r * wo..(r + 1) * wo];
                        if g.s == 1 {
                            for (yv, xv) in yrow.iter_mut().zip(xrow) {
                                *yv += wv * xv;
                            }
                        } else {
                            for (yv, xv) in yrow.iter_mut().zip(xrow.iter().step_by(g.s)) {
                                *yv += wv * xv;
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

pub(crate) fn conv2d_backward(
    x: &[f64],
    g: Conv2dGeom,
    w: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    need_dx: bool,
) -> Option<Vec<f64>> {
    let (ho, wo) = g.out_hw();
    let mut dx = need_dx.then(|| vec![0.0; g.c_in * g.h * g.w]);
    for o in 0..g.c_out {
        let dyo = &dy[o * ho * wo..(o + 1) * ho * wo];
        db[o] += dyo.iter().sum::<f64>();
        for i in 0..g.c_in {
            let xi = &x[i * g.h * g.w..(i + 1) * g.h * g.w];
            for kh in 0..g.k {
                for kw in 0..g.k {
                    let widx = ((o * g.c_in + i) * g.k + kh) * g.k + kw;
                    let mut acc = 0.0;
                    for r in 0..ho {
                        let xrow = &xi[(r * g.s + kh) * g.w + kw..];
                        let grow = &dyo[r * wo..(r + 1) * wo];
                        acc += grow
                            .iter()
                            .zip(xrow.iter().step_by(g.s))
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                    }
                    dw[widx] += acc;
                    if let Some(dx) = dx.as_mut() {
                        let wv = w[widx];
                        let dxi = &mut dx[i * g.h * g.w..(i + 1) * g.h * g.w];
                        for r in 0..ho {
                            let base = (r * g.s + kh) * g.w + kw;
                            let grow = &dyo[r * wo..(r + 1) * wo];
                            for (dxv, gv) in dxi[base..].iter_mut().step_by(g.s).zip(grow) {
                                *dxv += wv * gv;
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

/// 2×2 max-pool with stride 2 (floor). Returns the pooled map and the flat
/// input index of each maximum; ties go to the first element scanned.
pub(crate) fn maxpool2_forward(x: &[f64], c: usize, h: usize, w: usize) -> (Vec<f64>, Vec<usize>) {
    let (ho, wo) = (h / 2, w / 2);
    let mut y = Vec::with_capacity(c * ho * wo);
    let mut arg = Vec::with_capacity(c * ho * wo);
    for ch in 0..c {
        let base = ch * h * w;
        for r in 0..ho {
            for col in 0..wo {
                let mut best = base + 2 * r * w + 2 * col;
                for idx in [best + 1, best + w, best + w + 1] {
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                y.push(x[best]);
                arg.push(best);
            }
        }
    }
    (y, arg)
}

pub(crate) fn maxpool2_backward(dy: &[f64], arg: &[usize], input_len: usize) -> Vec<f64> {
    let mut dx = vec![0.0; input_len];
    for (&g, &idx) in dy.iter().zip(arg) {
        dx[idx] += g;
    }
    dx
}

pub(crate) fn relu_in_place(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Zero the gradient where the ReLU output was not positive.
pub(crate) fn relu_backward_in_place(dy: &mut [f64], y: &[f64]) {
    for (g, &v) in dy.iter_mut().zip(y) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Mean over the trailing `n` elements of each of `c` channels.
pub(crate) fn channel_mean(x: &[f64], c: usize, n: usize) -> Vec<f64> {
    (0..c)
        .map(|ch| x[ch * n..(ch + 1) * n].iter().sum::<f64>() / n as f64)
        .collect()
}

pub(crate) fn channel_mean_backward(dy: &[f64], n: usize) -> Vec<f64> {
    dy.iter().flat_map(|&g| std::iter::repeat_n(g / n as f64, n)).collect()
}

pub(crate) fn dense_forward(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            bias + w[o * n_in..(o + 1) * n_in]
                .iter()
                .zip(x)
                .map(|(a, c)| a * c)
                .sum::<f64>()
        })
        .collect()
}

pub(crate) fn dense_backward(x: &[f64], w: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let n_in = x.len();
    let mut dx = vec![0.0; n_in];
    for (o, &g) in dy.iter().enumerate() {
        db[o] += g;
        let row = &w[o * n_in..(o + 1) * n_in];
        let drow = &mut dw[o * n_in..(o + 1) * n_in];
        for j in 0..n_in {
            drow[j] += g * x[j];
            dx[j] += g * row[j];
        }
    }
    dx
}
