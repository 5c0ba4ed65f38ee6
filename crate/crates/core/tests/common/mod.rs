//! Shared test helpers: a dense reference evaluator, chain builders and a
//! brute-force graph oracle.

#![allow(dead_code)]

use foodnet_core::tables::toy::ToyWorld;
use foodnet_core::tables::{generate_synthetic_world, SyntheticSpec};
use foodnet_core::{CalibrationMode, SupplyUseTables};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense copy of the tables plus a direct, loop-based evaluation of the
/// calibration and the dynamics. Shares nothing with the sparse engine.
pub struct Dense {
    pub nc: usize,
    pub np: usize,
    pub nk: usize,
    nq: usize,
    food: usize,
    stock: Option<usize>,
    /// `s[c][k][i]`
    s: Vec<f64>,
    /// `u[o][i][d][k]`
    u: Vec<f64>,
    /// `y[o][i][d][q]`
    y: Vec<f64>,
}

impl Dense {
    pub fn new(t: &SupplyUseTables) -> Self {
        let reg = t.registry();
        let (nc, np, nk, nq) = (
            reg.n_countries(),
            reg.n_products(),
            reg.n_processes(),
            reg.purposes().len(),
        );
        let food = reg.purposes().iter().position(|p| p.code == "food").unwrap();
        let stock = reg.purposes().iter().position(|p| p.code == "stock_addition");
        let mut d = Dense {
            nc,
            np,
            nk,
            nq,
            food,
            stock,
            s: vec![0.0; nc * nk * np],
            u: vec![0.0; nc * np * nc * nk],
            y: vec![0.0; nc * np * nc * nq],
        };
        for (k, &v) in t.supply() {
            let idx = d.si(k.country.index(), k.process.index(), k.product.index());
            d.s[idx] = v;
        }
        for (k, &v) in t.uses() {
            let idx = d.ui(k.origin.index(), k.product.index(), k.user.index(), k.process.index());
            d.u[idx] = v;
        }
        for (k, &v) in t.demand() {
            let idx = d.yi(k.origin.index(), k.product.index(), k.destination.index(), k.purpose.index());
            d.y[idx] = v;
        }
        d
    }

    fn si(&self, c: usize, k: usize, i: usize) -> usize {
        (c * self.nk + k) * self.np + i
    }
    fn ui(&self, o: usize, i: usize, d: usize, k: usize) -> usize {
        ((o * self.np + i) * self.nc + d) * self.nk + k
    }
    fn yi(&self, o: usize, i: usize, d: usize, q: usize) -> usize {
        ((o * self.np + i) * self.nc + d) * self.nq + q
    }
    fn cell(&self, c: usize, i: usize) -> usize {
        c * self.np + i
    }
    fn ypos(&self, o: usize, i: usize, d: usize, q: usize) -> f64 {
        self.y[self.yi(o, i, d, q)].max(0.0)
    }

    pub fn balancing(&self, c: usize, i: usize) -> f64 {
        let mut b = 0.0;
        for k in 0..self.nk {
            b += self.s[self.si(c, k, i)];
        }
        for d in 0..self.nc {
            for k in 0..self.nk {
                b -= self.u[self.ui(c, i, d, k)];
            }
            for q in 0..self.nq {
                b -= self.ypos(c, i, d, q);
            }
        }
        b
    }

    /// `(prod, exp, food, else)` per cell.
    pub fn shares(&self, mode: CalibrationMode) -> Vec<[f64; 4]> {
        let mut out = Vec::with_capacity(self.nc * self.np);
        for c in 0..self.nc {
            for i in 0..self.np {
                let (mut prod, mut exp, mut food, mut other) = (0.0, 0.0, 0.0, 0.0);
                let (mut received, mut origin_total) = (0.0, 0.0);
                for o in 0..self.nc {
                    for k in 0..self.nk {
                        prod += self.u[self.ui(o, i, c, k)];
                    }
                    for q in 0..self.nq {
                        let v = self.ypos(o, i, c, q);
                        received += v;
                        if q == self.food {
                            food += v;
                        } else {
                            other += v;
                        }
                    }
                }
                for d in 0..self.nc {
                    let mut flow = 0.0;
                    for k in 0..self.nk {
                        flow += self.u[self.ui(c, i, d, k)];
                    }
                    for q in 0..self.nq {
                        flow += self.ypos(c, i, d, q);
                    }
                    origin_total += flow;
                    if d != c {
                        exp += flow;
                    }
                }
                let bpos = self.balancing(c, i).max(0.0);
                other += bpos;
                let div = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
                out.push(match mode {
                    CalibrationMode::Unified => {
                        let den = prod + exp + food + other;
                        [div(prod, den), div(exp, den), div(food, den), div(other, den)]
                    }
                    CalibrationMode::Verbatim => {
                        let den = origin_total + bpos;
                        [
                            div(prod, prod + received + bpos),
                            div(exp, den),
                            div(food, den),
                            div(other, den),
                        ]
                    }
                });
            }
        }
        out
    }

    /// `t[i][c][d]`: share of d's exports of i received by c.
    pub fn trade(&self) -> Vec<Vec<Vec<f64>>> {
        let mut t = vec![vec![vec![0.0; self.nc]; self.nc]; self.np];
        for i in 0..self.np {
            for d in 0..self.nc {
                let mut flows = vec![0.0; self.nc];
                for c in 0..self.nc {
                    if c == d {
                        continue;
                    }
                    for k in 0..self.nk {
                        flows[c] += self.u[self.ui(d, i, c, k)];
                    }
                    for q in 0..self.nq {
                        flows[c] += self.ypos(d, i, c, q);
                    }
                }
                let total: f64 = flows.iter().sum();
                if total > 0.0 {
                    for c in 0..self.nc {
                        t[i][c][d] = flows[c] / total;
                    }
                }
            }
        }
        t
    }

    fn process_input(&self, c: usize, k: usize) -> f64 {
        let mut total = 0.0;
        for o in 0..self.nc {
            for i in 0..self.np {
                total += self.u[self.ui(o, i, c, k)];
            }
        }
        total
    }

    /// `nu[c][i][k]`
    pub fn nu(&self) -> Vec<Vec<Vec<f64>>> {
        let mut nu = vec![vec![vec![0.0; self.nk]; self.np]; self.nc];
        for c in 0..self.nc {
            for i in 0..self.np {
                let mut per = vec![0.0; self.nk];
                for k in 0..self.nk {
                    for o in 0..self.nc {
                        per[k] += self.u[self.ui(o, i, c, k)];
                    }
                }
                let total: f64 = per.iter().sum();
                if total > 0.0 {
                    for k in 0..self.nk {
                        nu[c][i][k] = per[k] / total;
                    }
                }
            }
        }
        nu
    }

    pub fn initial(&self) -> (Vec<f64>, Vec<f64>) {
        let mut x0 = vec![0.0; self.nc * self.np];
        let mut corr = vec![0.0; self.nc * self.np];
        for c in 0..self.nc {
            for i in 0..self.np {
                let mut total = 0.0;
                for d in 0..self.nc {
                    for k in 0..self.nk {
                        total += self.u[self.ui(c, i, d, k)];
                    }
                    for q in 0..self.nq {
                        total += self.ypos(c, i, d, q);
                    }
                }
                x0[self.cell(c, i)] = total;
                let mut release = 0.0;
                if let Some(st) = self.stock {
                    for d in 0..self.nc {
                        release -= self.y[self.yi(d, i, c, st)].min(0.0);
                    }
                }
                corr[self.cell(c, i)] = release - self.balancing(c, i).min(0.0);
            }
        }
        (x0, corr)
    }

    /// Available amounts `x[t][cell]` for `t = 0..=horizon` with the given
    /// `(country, product)` targets shocked.
    pub fn run(&self, mode: CalibrationMode, shocked: &[(usize, usize)], horizon: usize) -> Vec<Vec<f64>> {
        let n = self.nc * self.np;
        let eta = self.shares(mode);
        let t = self.trade();
        let nu = self.nu();
        let (x0, corr) = self.initial();
        let mut p: Vec<f64> = (0..n).map(|c| eta[c][0] * x0[c]).collect();
        let mut e: Vec<f64> = (0..n).map(|c| eta[c][1] * x0[c]).collect();
        let mut out = Vec::new();
        for step in 0..=horizon {
            let mut o = vec![0.0; n];
            for c in 0..self.nc {
                for k in 0..self.nk {
                    let input = self.process_input(c, k);
                    let pooled: f64 = (0..self.np).map(|j| nu[c][j][k] * p[self.cell(c, j)]).sum();
                    for i in 0..self.np {
                        let s = self.s[self.si(c, k, i)];
                        o[self.cell(c, i)] += if input > 0.0 { s / input * pooled } else { s };
                    }
                }
            }
            if step == 0 {
                for cell in 0..n {
                    o[cell] += corr[cell];
                }
            }
            for &(c, i) in shocked {
                o[self.cell(c, i)] = 0.0;
            }
            let mut x = vec![0.0; n];
            for c in 0..self.nc {
                for i in 0..self.np {
                    let h: f64 = (0..self.nc).map(|d| t[i][c][d] * e[self.cell(d, i)]).sum();
                    x[self.cell(c, i)] = o[self.cell(c, i)] + h;
                }
            }
            p = (0..n).map(|c| eta[c][0] * x[c]).collect();
            e = (0..n).map(|c| eta[c][1] * x[c]).collect();
            out.push(x);
        }
        out
    }
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact zeros required to match.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Random world with at most `max` countries, products and processes.
pub fn random_world(seed: u64, max: usize) -> SupplyUseTables {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = SyntheticSpec::new(
        rng.gen_range(1..=max),
        rng.gen_range(1..=max),
        rng.gen_range(1..=max),
        rng.gen_range(0.0..0.6),
        seed,
    );
    generate_synthetic_world(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Trade,
    Convert,
}

/// A linear supply chain. The source is product 0 in country 0; each
/// `Trade` hop moves the current product to the next country and each
/// `Convert` hop turns it into the next product inside the current country.
/// Returns the tables and the `(country, product)` of the chain end.
pub fn chain(hops: &[Hop]) -> (SupplyUseTables, (usize, usize)) {
    let nc = 1 + hops.iter().filter(|h| **h == Hop::Trade).count();
    let np = 1 + hops.iter().filter(|h| **h == Hop::Convert).count();
    let mut w = ToyWorld::new(nc, np, np);
    let amount = 100.0;
    w.supply(0, 0, 0, amount);
    let (mut c, mut i) = (0usize, 0usize);
    for (n, hop) in hops.iter().enumerate() {
        let next_converts = hops.get(n + 1) == Some(&Hop::Convert);
        match hop {
            Hop::Trade => {
                if next_converts {
                    w.uses(c, i, c + 1, i + 1, amount);
                } else {
                    w.demand(c, i, c + 1, "food", amount);
                }
                c += 1;
            }
            Hop::Convert => {
                if n == 0 || hops[n - 1] == Hop::Convert {
                    w.uses(c, i, c, i + 1, amount);
                }
                w.supply(c, i + 1, i + 1, amount);
                i += 1;
            }
        }
    }
    w.demand(c, i, c, "food", amount);
    (w.build(), (c, i))
}

/// Directed reachability by repeated relaxation; `reach[a][b]` includes
/// `a == b`.
pub fn reachability(n: usize, edges: &[(usize, usize)], undirected: bool) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (v, row) in reach.iter_mut().enumerate() {
        row[v] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
        if undirected {
            reach[b][a] = true;
        }
    }
    for k in 0..n {
        for a in 0..n {
            if reach[a][k] {
                for b in 0..n {
                    if reach[k][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
    }
    reach
}

pub fn brute_largest_scc(n: usize, edges: &[(usize, usize)]) -> usize {
    let r = reachability(n, edges, false);
    (0..n)
        .map(|a| (0..n).filter(|&b| r[a][b] && r[b][a]).count())
        .max()
        .unwrap_or(0)
}

pub fn brute_largest_wcc(n: usize, edges: &[(usize, usize)]) -> usize {
    let r = reachability(n, edges, true);
    (0..n).map(|a| r[a].iter().filter(|&&x| x).count()).max().unwrap_or(0)
}

pub fn random_graph(rng: &mut impl Rng, max_nodes: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.gen_range(0..=max_nodes);
    let p: f64 = rng.gen_range(0.0..0.5);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    (n, edges)
}
