use rayon::prelude::*;

use super::check::reduce_row;
use super::{DecodeConfig, DecodeResult, EarlyStop, Strategy, TraceRow};
use crate::basegraph::BaseGraph;
use crate::error::{Error, Result};
use crate::kernels::{LaneWord, MAX_LANES};
use crate::llr::{Beta, Llr};

/// Decoder state. Messages are stored per base row in processing order:
/// row `r` occupies `Z * w_r(r)` consecutive slots, circulant row `i`
/// first, then edge `j` within the row.
#[derive(Clone, Debug)]
pub struct DecodeWorkspace<W> {
    /// `L_v`, one per code bit.
    pub posterior: Vec<W>,
    /// `L_b`, the depunctured channel input.
    pub channel: Vec<W>,
    /// `L_c->v`, one per lifted edge.
    pub messages: Vec<W>,
    pub iteration: usize,
}

#[derive(Clone, Debug)]
struct Layout {
    z: usize,
    k: usize,
    n_c: usize,
    rows_used: usize,
    /// Edge range of each base row, `rows_used + 1` entries.
    row_offsets: Vec<usize>,
    /// `(column, shift)` per base edge.
    edges: Vec<(usize, usize)>,
}

impl Layout {
    fn new(bg: &BaseGraph, rows_used: usize) -> Result<Self> {
        if rows_used == 0 || rows_used > bg.rows() {
            return Err(Error::RowsOutOfRange {
                rows: rows_used,
                min: 1,
                max: bg.rows(),
            });
        }
        let z = bg.z();
        let cols = bg.info_columns() + rows_used;
        let used = &bg.entries()[..bg.edges(rows_used)];
        if let Some(e) = used.iter().find(|e| e.col >= cols) {
            return Err(Error::InvalidConfig(format!(
                "row {} references column {} beyond the {cols} columns of a {rows_used}-row code",
                e.row, e.col
            )));
        }
        Ok(Layout {
            z,
            k: z * bg.info_columns(),
            n_c: z * cols,
            rows_used,
            row_offsets: (0..=rows_used).map(|r| bg.edges(r)).collect(),
            edges: used.iter().map(|e| (e.col, e.shift)).collect(),
        })
    }

    fn row(&self, r: usize) -> &[(usize, usize)] {
        &self.edges[self.row_offsets[r]..self.row_offsets[r + 1]]
    }

    fn message_range(&self, r: usize) -> std::ops::Range<usize> {
        self.z * self.row_offsets[r]..self.z * self.row_offsets[r + 1]
    }

    #[inline]
    fn var(&self, (col, shift): (usize, usize), i: usize) -> usize {
        let s = i + shift;
        col * self.z + if s >= self.z { s - self.z } else { s }
    }
}

/// Check-node pass over the `Z` circulant rows of base row `r`.
///
/// Reads posteriors from `src`, updates the row's messages in place (only on
/// `active` lanes) and writes each edge's new posterior candidate to `post`.
/// `sv` receives the per-circulant-row sign product of the incoming
/// posteriors, i.e. which lanes had the check unsatisfied on entry.
#[allow(clippy::too_many_arguments)]
fn process_row<W: LaneWord>(
    layout: &Layout,
    r: usize,
    strategy: Strategy,
    beta: &Beta,
    active: u32,
    src: &[W],
    messages: &mut [W],
    post: &mut [W],
    sv: &mut [u32],
    parallel: bool,
) {
    let edges = layout.row(r);
    let w = edges.len();
    let body = |i: usize, msg: &mut [W], post: &mut [W], sv: &mut u32, v2c: &mut Vec<W>| {
        v2c.clear();
        v2c.extend(
            edges
                .iter()
                .zip(msg.iter())
                .map(|(&e, &m)| src[layout.var(e, i)].sat_sub(m)),
        );
        let acc = reduce_row(v2c, |j| src[layout.var(edges[j], i)], strategy);
        for (j, (m, p)) in msg.iter_mut().zip(post.iter_mut()).enumerate() {
            let new = acc.output(j as u16, v2c[j], beta);
            *p = v2c[j].sat_add(new);
            *m = W::select(active, new, *m);
        }
        *sv = acc.s_v;
    };

    if parallel {
        messages
            .par_chunks_mut(w)
            .zip(post.par_chunks_mut(w))
            .zip(sv.par_iter_mut())
            .enumerate()
            .for_each_init(
                || Vec::with_capacity(w),
                |v2c, (i, ((msg, post), sv))| body(i, msg, post, sv, v2c),
            );
    } else {
        let mut v2c = Vec::with_capacity(w);
        for (i, ((msg, post), sv)) in messages
            .chunks_mut(w)
            .zip(post.chunks_mut(w))
            .zip(sv.iter_mut())
            .enumerate()
        {
            body(i, msg, post, sv, &mut v2c);
        }
    }
}

fn count_lanes(counts: &mut [usize; MAX_LANES], mask: u32) {
    for (l, c) in counts.iter_mut().enumerate() {
        *c += (mask >> l & 1) as usize;
    }
}

/// A reusable min-sum decoder for one code and configuration.
#[derive(Clone, Debug)]
pub struct Decoder<W: LaneWord> {
    layout: Layout,
    cfg: DecodeConfig,
    beta: Beta,
    ws: DecodeWorkspace<W>,
    post: Vec<W>,
    sv: Vec<u32>,
    flood: Vec<W>,
}

impl<W: LaneWord> Decoder<W> {
    pub fn new(bg: &BaseGraph, rows_used: usize, cfg: &DecodeConfig) -> Result<Self> {
        cfg.validate()?;
        if W::Lane::PRECISION != cfg.precision || W::LANES != cfg.rho {
            return Err(Error::InvalidConfig(format!(
                "decoder storage is {} x{} but configuration asks for {} x{}",
                W::Lane::PRECISION.name(),
                W::LANES,
                cfg.precision.name(),
                cfg.rho
            )));
        }
        let layout = Layout::new(bg, rows_used)?;
        let max_w = (0..rows_used).map(|r| bg.row_weight(r)).max().unwrap_or(0);
        let edges = layout.edges.len();
        Ok(Decoder {
            ws: DecodeWorkspace {
                posterior: vec![W::default(); layout.n_c],
                channel: vec![W::default(); layout.n_c],
                messages: vec![W::default(); layout.z * edges],
                iteration: 0,
            },
            post: vec![W::default(); layout.z * max_w],
            sv: vec![0; layout.z],
            flood: Vec::new(),
            beta: Beta::new(cfg.beta)?,
            cfg: *cfg,
            layout,
        })
    }

    pub fn lanes(&self) -> usize {
        W::LANES
    }

    pub fn config(&self) -> &DecodeConfig {
        &self.cfg
    }

    pub fn workspace(&self) -> &DecodeWorkspace<W> {
        &self.ws
    }

    /// Code length `N_c`.
    pub fn n_c(&self) -> usize {
        self.layout.n_c
    }

    pub fn k(&self) -> usize {
        self.layout.k
    }

    /// Loads channel LLRs (`N_c` words, punctured positions zero) and clears
    /// all messages.
    pub fn init(&mut self, llrs: &[W]) -> Result<()> {
        if llrs.len() != self.layout.n_c {
            return Err(Error::LengthMismatch {
                expected: self.layout.n_c,
                found: llrs.len(),
            });
        }
        self.ws.channel.copy_from_slice(llrs);
        self.ws.posterior.copy_from_slice(llrs);
        self.ws.messages.fill(W::default());
        self.ws.iteration = 0;
        Ok(())
    }

    /// Runs the check update of base row `r` and folds the new messages into
    /// the posteriors, on the lanes in `active`.
    fn layer(&mut self, r: usize, active: u32) -> [usize; MAX_LANES] {
        let w = self.layout.row(r).len();
        let z = self.layout.z;
        let range = self.layout.message_range(r);
        let DecodeWorkspace {
            posterior,
            messages,
            ..
        } = &mut self.ws;
        let post = &mut self.post[..z * w];
        process_row(
            &self.layout,
            r,
            self.cfg.strategy,
            &self.beta,
            active,
            posterior,
            &mut messages[range],
            post,
            &mut self.sv,
            self.cfg.parallel_rows,
        );
        let edges = self.layout.row(r);
        for i in 0..z {
            for (j, &e) in edges.iter().enumerate() {
                let v = self.layout.var(e, i);
                posterior[v] = W::select(active, post[i * w + j], posterior[v]);
            }
        }
        let mut unsatisfied = [0; MAX_LANES];
        for &mask in &self.sv {
            count_lanes(&mut unsatisfied, mask);
        }
        unsatisfied
    }

    /// Processes a single layer on all lanes.
    pub fn process_layer(&mut self, r: usize) {
        self.layer(r, W::all_lanes());
    }

    /// One layered iteration over base rows in ascending order. Returns, per
    /// lane, how many checks were unsatisfied when their layer was visited.
    pub fn layered_iteration(&mut self) -> [usize; MAX_LANES] {
        self.layered_pass(W::all_lanes())
    }

    fn layered_pass(&mut self, active: u32) -> [usize; MAX_LANES] {
        let mut unsatisfied = [0; MAX_LANES];
        for r in 0..self.layout.rows_used {
            let u = self.layer(r, active);
            for (a, b) in unsatisfied.iter_mut().zip(u) {
                *a += b;
            }
        }
        self.ws.iteration += 1;
        unsatisfied
    }

    /// One flooding iteration: every row reads the previous posteriors, then
    /// `L_v = L_b + sum of incoming messages`.
    pub fn flooding_iteration(&mut self) {
        self.flooding_pass(W::all_lanes());
    }

    fn flooding_pass(&mut self, active: u32) {
        let z = self.layout.z;
        for r in 0..self.layout.rows_used {
            let w = self.layout.row(r).len();
            let range = self.layout.message_range(r);
            process_row(
                &self.layout,
                r,
                self.cfg.strategy,
                &self.beta,
                active,
                &self.ws.posterior,
                &mut self.ws.messages[range],
                &mut self.post[..z * w],
                &mut self.sv,
                self.cfg.parallel_rows,
            );
        }
        self.flood.clear();
        self.flood.extend_from_slice(&self.ws.channel);
        for r in 0..self.layout.rows_used {
            let edges = self.layout.row(r);
            let msgs = &self.ws.messages[self.layout.message_range(r)];
            for i in 0..z {
                for (j, &e) in edges.iter().enumerate() {
                    let v = self.layout.var(e, i);
                    self.flood[v] = self.flood[v].sat_add(msgs[i * edges.len() + j]);
                }
            }
        }
        for (p, &f) in self.ws.posterior.iter_mut().zip(&self.flood) {
            *p = W::select(active, f, *p);
        }
        self.ws.iteration += 1;
    }

    /// Unsatisfied parity checks of the current hard decisions, per lane.
    pub fn syndrome_weights(&self) -> [usize; MAX_LANES] {
        let mut weights = [0; MAX_LANES];
        for r in 0..self.layout.rows_used {
            let edges = self.layout.row(r);
            for i in 0..self.layout.z {
                let parity = edges.iter().fold(0u32, |m, &e| {
                    m ^ self.ws.posterior[self.layout.var(e, i)].sign_mask()
                });
                count_lanes(&mut weights, parity);
            }
        }
        weights
    }

    /// Hard decisions of `lane` on the first `n` code bits.
    pub fn hard_bits(&self, lane: usize, n: usize) -> Vec<u8> {
        self.ws.posterior[..n]
            .iter()
            .map(|w| w.lane(lane).hard_bit())
            .collect()
    }

    fn min_abs(&self, lane: usize) -> f64 {
        self.ws
            .posterior
            .iter()
            .map(|w| W::Lane::mag_to_f64(W::mag_lane(w.magnitudes(), lane)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Layered decoding of `llrs` (`N_c` words).
    pub fn decode(&mut self, llrs: &[W]) -> Result<Vec<DecodeResult>> {
        self.run(llrs, |d, active| {
            d.layered_pass(active);
        })
    }

    /// Flooding decoding of `llrs` (`N_c` words).
    pub fn decode_flooding(&mut self, llrs: &[W]) -> Result<Vec<DecodeResult>> {
        self.run(llrs, |d, active| d.flooding_pass(active))
    }

    /// Iterates until every lane has stopped. A lane stops when its
    /// early-stop rule holds after a full iteration, or at `max_iter`; from
    /// then on its posteriors and messages are frozen so its result matches
    /// a single-codeword decode.
    fn run(
        &mut self,
        llrs: &[W],
        mut step: impl FnMut(&mut Self, u32),
    ) -> Result<Vec<DecodeResult>> {
        self.init(llrs)?;
        let k = self.layout.k;
        let mut results: Vec<Option<DecodeResult>> = vec![None; W::LANES];
        let mut traces: Vec<Vec<TraceRow>> = vec![Vec::new(); W::LANES];
        let mut active = W::all_lanes();

        for it in 1..=self.cfg.max_iter {
            step(self, active);
            let last = it == self.cfg.max_iter;
            if self.cfg.early_stop == EarlyStop::None && !last && !self.cfg.trace {
                continue;
            }
            let weights = self.syndrome_weights();
            for lane in 0..W::LANES {
                if active >> lane & 1 == 0 {
                    continue;
                }
                if self.cfg.trace {
                    traces[lane].push(TraceRow {
                        iteration: it,
                        syndrome_weight: weights[lane],
                        min_abs_llr: self.min_abs(lane),
                    });
                }
                let valid = weights[lane] == 0;
                let done = match self.cfg.early_stop {
                    EarlyStop::Syndrome => valid,
                    EarlyStop::Crc => valid && self.cfg.crc.check(&self.hard_bits(lane, k)),
                    EarlyStop::None => false,
                };
                if done || last {
                    let bits = self.hard_bits(lane, k);
                    let crc_ok = (self.cfg.final_crc || self.cfg.early_stop == EarlyStop::Crc)
                        .then(|| self.cfg.crc.check(&bits));
                    let success =
                        valid && (self.cfg.early_stop != EarlyStop::Crc || crc_ok == Some(true));
                    results[lane] = Some(DecodeResult {
                        bits,
                        iterations: it,
                        success,
                        syndrome_weight: weights[lane],
                        crc_ok,
                        trace: std::mem::take(&mut traces[lane]),
                    });
                    active &= !(1 << lane);
                }
            }
            if active == 0 {
                break;
            }
        }
        Ok(results
            .into_iter()
            .map(|r| r.expect("every lane finishes by max_iter"))
            .collect())
    }
}

/// Transposes per-codeword LLR vectors into packed words: word `v` holds
/// position `v` of every lane.
pub fn pack_lanes<W: LaneWord>(lanes: &[Vec<W::Lane>]) -> Vec<W> {
    assert_eq!(lanes.len(), W::LANES, "one vector per lane");
    let n = lanes[0].len();
    let mut buf = [W::Lane::default(); MAX_LANES];
    (0..n)
        .map(|v| {
            for (b, lane) in buf.iter_mut().zip(lanes) {
                *b = lane[v];
            }
            W::from_lanes(&buf[..W::LANES])
        })
        .collect()
}

/// Layered decoding with a fresh [`Decoder`].
pub fn decode<W: LaneWord>(
    llrs: &[W],
    bg: &BaseGraph,
    rows_used: usize,
    cfg: &DecodeConfig,
) -> Result<Vec<DecodeResult>> {
    Decoder::new(bg, rows_used, cfg)?.decode(llrs)
}

/// Flooding decoding with a fresh [`Decoder`].
pub fn decode_flooding<W: LaneWord>(
    llrs: &[W],
    bg: &BaseGraph,
    rows_used: usize,
    cfg: &DecodeConfig,
) -> Result<Vec<DecodeResult>> {
    Decoder::new(bg, rows_used, cfg)?.decode_flooding(llrs)
}
