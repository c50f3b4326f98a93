//! Daubechies scaling functions tabulated on a dyadic grid.

// filter taps are quoted at their published precision
#![allow(clippy::excessive_precision)]

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, Mat};
use crate::math::{floor, sqrt};

/// Dyadic depth of the scaling-function table (grid spacing `2^-14`).
pub const TABLE_DEPTH: u32 = 14;

/// Smallest and largest supported number of vanishing moments.
pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 10;

/// Low-pass filter `h_0..h_{2N-1}` normalized to `Σ h_k = √2`.
pub fn filter(order: usize) -> Result<&'static [f64]> {
    Ok(match order {
        2 => &DB2,
        3 => &DB3,
        4 => &DB4,
        5 => &DB5,
        6 => &DB6,
        7 => &DB7,
        8 => &DB8,
        9 => &DB9,
        10 => &DB10,
        _ => {
            return Err(Error::config(alloc::format!(
                "Daubechies order must lie in {MIN_ORDER}..={MAX_ORDER}, got {order}"
            )))
        }
    })
}

/// Values of the scaling function `φ` at `k / 2^TABLE_DEPTH` over its support
/// `[0, 2N − 1]`, linearly interpolated in between.
#[derive(Debug)]
pub struct ScalingTable {
    order: usize,
    values: Vec<f64>,
}

impl ScalingTable {
    /// Integer values from the refinement eigenproblem, then dyadic refinement.
    pub fn new(order: usize) -> Result<Arc<Self>> {
        let h = filter(order)?;
        let support = 2 * order - 1;
        let res = 1usize << TABLE_DEPTH;
        let mut values = vec![0.0; support * res + 1];
        let r2 = sqrt(2.0);

        // φ(n) = √2 Σ_k h_k φ(2n − k) on the interior integers 1..support-1,
        // normalized by Σ_n φ(n) = 1 (partition of unity).
        let m = support - 1;
        let mut a = Mat::zeros(m, m);
        for row in 0..m {
            let n = row + 1;
            for col in 0..m {
                let k = 2 * n as isize - (col as isize + 1);
                if (0..h.len() as isize).contains(&k) {
                    a[(row, col)] = r2 * h[k as usize];
                }
            }
            a[(row, row)] -= 1.0;
        }
        for col in 0..m {
            a[(m - 1, col)] = 1.0;
        }
        let mut rhs = vec![0.0; m];
        rhs[m - 1] = 1.0;
        let ints = solve_dense(&a, &rhs)?;
        for (i, v) in ints.iter().enumerate() {
            values[(i + 1) * res] = *v;
        }

        for level in 1..=TABLE_DEPTH {
            let step = 1usize << (TABLE_DEPTH - level);
            let mut idx = step;
            while idx < support * res {
                // odd multiples of the current spacing only
                let mut acc = 0.0;
                for (k, hk) in h.iter().enumerate() {
                    let arg = 2 * idx as isize - (k * res) as isize;
                    if arg > 0 && (arg as usize) < support * res {
                        acc += hk * values[arg as usize];
                    }
                }
                values[idx] = r2 * acc;
                idx += 2 * step;
            }
        }
        Ok(Arc::new(ScalingTable { order, values }))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn support(&self) -> f64 {
        (2 * self.order - 1) as f64
    }

    /// `φ(u)`, zero outside the open support.
    pub fn eval(&self, u: f64) -> f64 {
        let len = self.support();
        if !(u > 0.0 && u < len) {
            return 0.0;
        }
        let pos = u * (1u64 << TABLE_DEPTH) as f64;
        let i = floor(pos) as usize;
        let frac = pos - i as f64;
        let lo = self.values[i];
        let hi = self.values.get(i + 1).copied().unwrap_or(0.0);
        lo + frac * (hi - lo)
    }

    /// Grid values, exposed for independent checks.
    pub fn grid(&self) -> &[f64] {
        &self.values
    }

    /// Periodized scaling function `φ_{level,k}(t) = 2^{level/2} Σ_l φ(2^level (t + l) − k)`.
    pub fn periodized(&self, level: u32, k: usize, t: f64) -> f64 {
        let scale = (1u64 << level) as f64;
        let base = scale * t - k as f64;
        let len = self.support();
        // arguments base + scale·l inside (0, len)
        let l_min = floor(-base / scale) as i64;
        let mut acc = 0.0;
        let mut l = l_min;
        loop {
            let u = base + scale * l as f64;
            if u >= len {
                break;
            }
            acc += self.eval(u);
            l += 1;
        }
        sqrt(scale) * acc
    }
}

const DB2: [f64; 4] = [
    0.48296291314453414337,
    0.83651630373780790558,
    0.22414386804201338103,
    -0.12940952255126038117,
];

const DB3: [f64; 6] = [
    0.332670552950082616,
    0.80689150931109257649,
    0.4598775021184915701,
    -0.1350110200102545887,
    -0.085441273882026661693,
    0.035226291885709536603,
];

const DB4: [f64; 8] = [
    0.23037781330889650086,
    0.71484657055291564709,
    0.63088076792985890788,
    -0.027983769416859854211,
    -0.18703481171909308408,
    0.030841381835560763627,
    0.032883011666885199735,
    -0.010597401785069032105,
];

const DB5: [f64; 10] = [
    0.16010239797419291448,
    0.60382926979718967054,
    0.72430852843777292773,
    0.13842814590132073151,
    -0.24229488706638203186,
    -0.032244869584638374648,
    0.077571493840045713523,
    -0.0062414902127982742742,
    -0.012580751999081999469,
    0.003335725285473771278,
];

const DB6: [f64; 12] = [
    0.11154074335010946362,
    0.49462389039845308568,
    0.75113390802109535068,
    0.31525035170919762909,
    -0.22626469396543982008,
    -0.12976686756726193556,
    0.097501605587323049102,
    0.027522865530305728626,
    -0.031582039317486029565,
    0.00055384220116149613925,
    0.0047772575109455106396,
    -0.0010773010853084795649,
];

const DB7: [f64; 14] = [
    0.07785205408500917902,
    0.39653931948191730654,
    0.72913209084623511992,
    0.46978228740519312247,
    -0.14390600392856497541,
    -0.22403618499387498264,
    0.071309219266830264751,
    0.080612609151083071913,
    -0.03802993693501441358,
    -0.016574541630666880654,
    0.012550998556099840613,
    0.00042957797292136652113,
    -0.0018016407040474909153,
    0.00035371379997452024845,
];

const DB8: [f64; 16] = [
    0.054415842243104009955,
    0.31287159091429997066,
    0.67563073629728980681,
    0.58535468365420671277,
    -0.015829105256349305667,
    -0.28401554296154692652,
    0.00047248457391328277036,
    0.12874742662047845886,
    -0.01736930100180754617,
    -0.044088253930794751507,
    0.013981027917398281649,
    0.0087460940474057767164,
    -0.0048703529934515743104,
    -0.0003917403733769470463,
    0.00067544940645056936637,
    -0.00011747678412476953373,
];

const DB9: [f64; 18] = [
    0.038077947363878346589,
    0.24383467461259035373,
    0.6048231236901111119,
    0.65728807805130053808,
    0.13319738582500757619,
    -0.29327378327917490881,
    -0.096840783222976460514,
    0.14854074933810638014,
    0.030725681479333379212,
    -0.067632829061329973676,
    0.00025094711483145195759,
    0.022361662123679097205,
    -0.0047232047577513972779,
    -0.0042815036824634298345,
    0.0018476468830562264766,
    0.00023038576352319596721,
    -0.00025196318894271013697,
    0.000039347320316271599481,
];

const DB10: [f64; 20] = [
    0.026670057900555553587,
    0.18817680007769148902,
    0.52720118893172558648,
    0.68845903945360356574,
    0.28117234366057746075,
    -0.24984642432731537942,
    -0.1959462743773770435,
    0.12736934033579326008,
    0.09305736460357235116,
    -0.071394147166397087145,
    -0.029457536821875812858,
    0.03321267405934100174,
    0.0036065535669561696554,
    -0.010733175483330575044,
    0.0013953517470529011658,
    0.0019924052951850561172,
    -0.00068585669495971162656,
    -0.00011646685512928545095,
    0.000093588670320069591334,
    -0.000013264202894521244812,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        for order in MIN_ORDER..=MAX_ORDER {
            let h = filter(order).unwrap();
            let sum: f64 = h.iter().sum();
            assert!((sum - 2f64.sqrt()).abs() < 1e-14, "order {order}");
            for shift in 0..order {
                let ip: f64 = (2 * shift..h.len()).map(|k| h[k] * h[k - 2 * shift]).sum();
                let expect = if shift == 0 { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-14, "order {order} shift {shift}");
            }
        }
        assert!(filter(1).is_err());
        assert!(filter(11).is_err());
    }

    #[test]
    fn partition_of_unity_and_unit_mass() {
        for order in [2, 4, 9] {
            let tab = ScalingTable::new(order).unwrap();
            for &u in &[0.1, 0.37, 0.5, 0.93] {
                let s: f64 = (0..2 * order).map(|k| tab.eval(u + k as f64)).sum();
                assert!((s - 1.0).abs() < 1e-6, "order {order} u {u}: {s}");
            }
            let res = (1u64 << TABLE_DEPTH) as f64;
            let mass: f64 = tab.grid().iter().sum::<f64>() / res;
            assert!((mass - 1.0).abs() < 1e-9, "order {order}: mass {mass}");
        }
    }

    #[test]
    fn level_zero_periodization_is_constant() {
        let tab = ScalingTable::new(3).unwrap();
        for &t in &[0.0, 0.2, 0.77, 1.0] {
            assert!((tab.periodized(0, 0, t) - 1.0).abs() < 1e-6);
        }
    }

    /// Cascade algorithm from a unit impulse: `c ← √2 · (c ↑ 2) * h`, so
    /// that after `j` rounds `c[k] ≈ φ(k / 2^j)`.
    fn cascade(h: &[f64], rounds: u32) -> Vec<f64> {
        let r2 = 2f64.sqrt();
        let mut c = vec![1.0];
        for _ in 0..rounds {
            let mut next = vec![0.0; 2 * c.len() + h.len()];
            for (i, &ci) in c.iter().enumerate() {
                for (k, &hk) in h.iter().enumerate() {
                    next[2 * i + k] += r2 * hk * ci;
                }
            }
            c = next;
        }
        c
    }

    #[test]
    fn db9_matches_cascade_oracle_at_depth_12() {
        let h = filter(9).unwrap();
        // the cascade converges like 2^-rounds at dyadic points
        let deep = cascade(h, 18);
        let tab = ScalingTable::new(9).unwrap();
        let stride = 1 << 6;
        let mut worst: f64 = 0.0;
        for k in 1..17 * 4096 {
            let oracle = deep[k * stride];
            let u = k as f64 / 4096.0;
            worst = worst.max((tab.eval(u) - oracle).abs());
        }
        assert!(worst < 3e-5, "max deviation {worst}");
    }
}
