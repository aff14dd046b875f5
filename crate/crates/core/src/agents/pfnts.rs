//! Thompson sampling from a sequential predictive model.
//!
//! After a round-robin warm-up of `tau` pulls per arm, each arm's latent
//! mean is approximated by the SubCLT snapshot Gaussian and the arm with
//! the largest draw is played. Two arm encodings are maintained while dual
//! caching is on: disjoint (one model and history per arm) and one-hot (one
//! shared model queried at `(x, e_k)`). At each switch time every
//! observation since the previous switch is scored by CRPS under both
//! encodings, using the latest stored snapshot built strictly before it;
//! the encoding with the smaller cumulative score becomes active. Dual
//! caching stops for good at the last switch time.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{argmax_random_tie, check_arm, check_dim, Agent, AgentError};
use crate::domain::{crps, encode, Encoding};
use crate::predictive::{ModelFactory, PredictiveModel, SnapshotHandle};
use crate::subclt::{is_grid_point, subclt_estimate, SubCltError, DEFAULT_V_FLOOR};

pub const DEFAULT_SWITCH_TIMES: [usize; 6] = [64, 128, 256, 512, 1024, 2048];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionRule {
    /// Draw from the snapshot Gaussian of the latent mean.
    Thompson,
    /// Draw a future reward from the predictive distribution.
    PredictiveSampling,
    /// Take the largest predictive mean.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingMode {
    Adaptive,
    Disjoint,
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfnConfig {
    pub base: f64,
    pub warmup: usize,
    pub v_floor: f64,
    /// Variance used while a history is too short for a grid.
    pub v_fallback: f64,
    pub switch_times: Vec<usize>,
    /// Arm count from which one-hot starts as the active encoding.
    pub k_thr: usize,
    pub encoding: EncodingMode,
    pub rule: DecisionRule,
}

impl Default for PfnConfig {
    fn default() -> Self {
        Self {
            base: 2.0,
            warmup: 5,
            v_floor: DEFAULT_V_FLOOR,
            v_fallback: 1.0,
            switch_times: DEFAULT_SWITCH_TIMES.to_vec(),
            k_thr: 5,
            encoding: EncodingMode::Adaptive,
            rule: DecisionRule::Thompson,
        }
    }
}

impl PfnConfig {
    fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: String| Err(AgentError::Param(m));
        if !(self.base.is_finite() && self.base > 1.0) {
            return bad(format!("base must exceed 1, got {}", self.base));
        }
        if !(self.v_floor >= 0.0 && self.v_floor.is_finite()) {
            return bad(format!("v_floor must be nonnegative, got {}", self.v_floor));
        }
        if !(self.v_fallback > 0.0 && self.v_fallback.is_finite()) {
            return bad(format!("v_fallback must be positive, got {}", self.v_fallback));
        }
        if self.switch_times.windows(2).any(|w| w[0] >= w[1]) || self.switch_times.contains(&0) {
            return bad(format!(
                "switch times must be positive and strictly increasing, got {:?}",
                self.switch_times
            ));
        }
        Ok(())
    }
}

/// Gaussian used for one arm's Thompson draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    pub mean: f64,
    pub variance: f64,
    /// Refresh point, or `None` when the short-history fallback was used.
    pub refresh: Option<usize>,
}

/// Outcome of the comparison at one switch time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub t: usize,
    /// Observations scored under both encodings in this interval.
    pub scored: usize,
    pub active_before: Encoding,
    pub active_after: Encoding,
    /// Cumulative CRPS of the encoding active before the comparison.
    pub c_active: f64,
    /// Cumulative CRPS of the challenger before the comparison.
    pub c_challenger: f64,
    pub swapped: bool,
}

struct Histories {
    encoding: Encoding,
    arms: usize,
    models: Vec<Box<dyn PredictiveModel>>,
    snaps: Vec<BTreeMap<usize, SnapshotHandle>>,
    crps: f64,
}

impl Histories {
    fn new(
        encoding: Encoding,
        arms: usize,
        dim: usize,
        factory: &ModelFactory,
    ) -> Result<Self, AgentError> {
        let slots = match encoding {
            Encoding::Disjoint => arms,
            Encoding::OneHot => 1,
        };
        let models = (0..slots)
            .map(|_| factory(encoding.input_dim(dim, arms)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            encoding,
            arms,
            models,
            snaps: vec![BTreeMap::new(); slots],
            crps: 0.0,
        })
    }

    fn slot(&self, arm: usize) -> usize {
        match self.encoding {
            Encoding::Disjoint => arm,
            Encoding::OneHot => 0,
        }
    }

    fn query(&self, x: &[f64], arm: usize) -> Vec<f64> {
        encode(self.encoding, x, arm, self.arms)
            .expect("arm index checked by caller")
            .values
    }

    fn len_for(&self, arm: usize) -> usize {
        self.models[self.slot(arm)].len()
    }

    /// Appends and returns the position of the new observation in its history.
    fn append(&mut self, x: &[f64], arm: usize, r: f64, base: f64) -> Result<usize, AgentError> {
        let slot = self.slot(arm);
        let q = self.query(x, arm);
        let model = &mut self.models[slot];
        let pos = model.len();
        model.append(&q, r)?;
        let len = pos + 1;
        if is_grid_point(len, base) {
            let snap = model.snapshot(len)?;
            self.snaps[slot].insert(len, snap);
        }
        Ok(pos)
    }

    /// CRPS of `r` under the latest snapshot built from data before `pos`.
    fn score(&mut self, x: &[f64], arm: usize, r: f64, pos: usize) -> Result<Option<f64>, AgentError> {
        let slot = self.slot(arm);
        let Some(snap) = self.snaps[slot].range(..=pos).next_back().map(|(_, s)| s.clone()) else {
            return Ok(None);
        };
        let q = self.query(x, arm);
        let dist = self.models[slot].predict_dist_at(&snap, &q)?;
        Ok(Some(crps(&dist, r).map_err(crate::predictive::PredictError::from)?))
    }
}

struct Pending {
    x: Vec<f64>,
    arm: usize,
    reward: f64,
    pos_active: usize,
    pos_challenger: usize,
}

pub struct PfnTs {
    name: String,
    arms: usize,
    dim: usize,
    cfg: PfnConfig,
    active: Histories,
    challenger: Option<Histories>,
    pending: Vec<Pending>,
    events: Vec<SwitchEvent>,
}

impl PfnTs {
    pub fn new(
        name: &str,
        arms: usize,
        dim: usize,
        factory: &ModelFactory,
        cfg: PfnConfig,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        if arms == 0 {
            return Err(AgentError::Param("need at least one arm".into()));
        }
        let first = match cfg.encoding {
            EncodingMode::Disjoint => Encoding::Disjoint,
            EncodingMode::OneHot => Encoding::OneHot,
            EncodingMode::Adaptive if arms < cfg.k_thr => Encoding::Disjoint,
            EncodingMode::Adaptive => Encoding::OneHot,
        };
        let active = Histories::new(first, arms, dim, factory)?;
        let challenger = match cfg.encoding {
            EncodingMode::Adaptive if !cfg.switch_times.is_empty() => {
                Some(Histories::new(first.other(), arms, dim, factory)?)
            }
            _ => None,
        };
        Ok(Self {
            name: name.to_owned(),
            arms,
            dim,
            cfg,
            active,
            challenger,
            pending: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &PfnConfig {
        &self.cfg
    }

    pub fn active_encoding(&self) -> Encoding {
        self.active.encoding
    }

    pub fn challenger_encoding(&self) -> Option<Encoding> {
        self.challenger.as_ref().map(|c| c.encoding)
    }

    pub fn dual_caching(&self) -> bool {
        self.challenger.is_some()
    }

    /// Cumulative CRPS of the active encoding and, while present, the challenger.
    pub fn cumulative_crps(&self) -> (f64, Option<f64>) {
        (self.active.crps, self.challenger.as_ref().map(|c| c.crps))
    }

    pub fn switch_events(&self) -> &[SwitchEvent] {
        &self.events
    }

    /// Number of stored observations behind arm `arm` under the active encoding.
    pub fn history_len(&self, arm: usize) -> usize {
        self.active.len_for(arm)
    }

    /// Total observations held by the challenger, if any.
    pub fn challenger_len(&self) -> Option<usize> {
        self.challenger
            .as_ref()
            .map(|c| c.models.iter().map(|m| m.len()).sum())
    }

    /// Snapshot Gaussians for every arm at context `x`.
    pub fn thompson_params(&mut self, x: &[f64]) -> Result<Vec<ArmParams>, AgentError> {
        check_dim(self.dim, x.len())?;
        let (base, v_floor, v_fallback) = (self.cfg.base, self.cfg.v_floor, self.cfg.v_fallback);
        (0..self.arms)
            .map(|k| {
                let h = &mut self.active;
                let q = h.query(x, k);
                let slot = h.slot(k);
                let model = h.models[slot].as_mut();
                let n = model.len();
                match subclt_estimate(model, n, &q, base) {
                    Ok(est) => Ok(ArmParams {
                        mean: est.mean,
                        variance: est.sampling_variance(v_floor),
                        refresh: Some(est.refresh),
                    }),
                    Err(SubCltError::GridTooShort { .. }) => Ok(ArmParams {
                        mean: model.predict_mean(&q, n)?,
                        variance: v_fallback,
                        refresh: None,
                    }),
                    Err(e) => Err(e.into()),
                }
            })
            .collect()
    }

    fn predictive_values(&mut self, x: &[f64], rng: &mut dyn RngCore) -> Result<Vec<f64>, AgentError> {
        check_dim(self.dim, x.len())?;
        let rule = self.cfg.rule;
        (0..self.arms)
            .map(|k| {
                let h = &mut self.active;
                let q = h.query(x, k);
                let slot = h.slot(k);
                let model = h.models[slot].as_mut();
                let n = model.len();
                Ok(match rule {
                    DecisionRule::Greedy => model.predict_mean(&q, n)?,
                    _ => model.predict_dist(&q, n)?.sample(rng),
                })
            })
            .collect()
    }

    fn switch(&mut self, t: usize) -> Result<(), AgentError> {
        let Some(ch) = self.challenger.as_mut() else {
            return Ok(());
        };
        let mut scored = 0;
        let (mut add_a, mut add_c) = (0.0, 0.0);
        for p in &self.pending {
            let a = self.active.score(&p.x, p.arm, p.reward, p.pos_active)?;
            let c = ch.score(&p.x, p.arm, p.reward, p.pos_challenger)?;
            // only observations both encodings can score enter the comparison
            if let (Some(a), Some(c)) = (a, c) {
                add_a += a;
                add_c += c;
                scored += 1;
            }
        }
        self.pending.clear();
        self.active.crps += add_a;
        ch.crps += add_c;

        let before = self.active.encoding;
        let (c_active, c_challenger) = (self.active.crps, ch.crps);
        let swapped = c_challenger < c_active;
        if swapped {
            std::mem::swap(&mut self.active, ch);
        }
        if Some(&t) == self.cfg.switch_times.last() {
            self.challenger = None;
        }
        self.events.push(SwitchEvent {
            t,
            scored,
            active_before: before,
            active_after: self.active.encoding,
            c_active,
            c_challenger,
            swapped,
        });
        Ok(())
    }
}

fn gaussian_draw(p: &ArmParams, rng: &mut dyn RngCore) -> f64 {
    if p.variance == 0.0 {
        return p.mean;
    }
    let z: f64 = rng.sample(StandardNormal);
    p.mean + p.variance.sqrt() * z
}

impl Agent for PfnTs {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_arms(&self) -> usize {
        self.arms
    }

    fn act(&mut self, x: &[f64], t: usize, rng: &mut dyn RngCore) -> Result<usize, AgentError> {
        if t >= 1 && t <= self.cfg.warmup * self.arms {
            return Ok((t - 1) % self.arms);
        }
        let values = match self.cfg.rule {
            DecisionRule::Thompson => {
                let params = self.thompson_params(x)?;
                params.iter().map(|p| gaussian_draw(p, rng)).collect::<Vec<_>>()
            }
            _ => self.predictive_values(x, rng)?,
        };
        Ok(argmax_random_tie(&values, rng))
    }

    fn update(&mut self, x: &[f64], arm: usize, reward: f64, t: usize) -> Result<(), AgentError> {
        check_arm(arm, self.arms)?;
        check_dim(self.dim, x.len())?;
        let base = self.cfg.base;
        let pos_active = self.active.append(x, arm, reward, base)?;
        if let Some(ch) = self.challenger.as_mut() {
            let pos_challenger = ch.append(x, arm, reward, base)?;
            self.pending.push(Pending {
                x: x.to_vec(),
                arm,
                reward,
                pos_active,
                pos_challenger,
            });
        }
        if self.cfg.switch_times.contains(&t) {
            self.switch(t)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PredictiveDistribution;
    use crate::predictive::{conjugate_factory, PredictError};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Predicts a fixed mean (with zero spread) for every query and prefix.
    struct Constant {
        dim: usize,
        n: usize,
        mean: f64,
        var: f64,
    }

    impl PredictiveModel for Constant {
        fn input_dim(&self) -> usize {
            self.dim
        }
        fn len(&self) -> usize {
            self.n
        }
        fn append(&mut self, _x: &[f64], _r: f64) -> Result<(), PredictError> {
            self.n += 1;
            Ok(())
        }
        fn snapshot(&mut self, p: usize) -> Result<SnapshotHandle, PredictError> {
            Ok(SnapshotHandle::new(p, Arc::new(p)))
        }
        fn predict_mean_at(&mut self, _s: &SnapshotHandle, _q: &[f64]) -> Result<f64, PredictError> {
            Ok(self.mean)
        }
        fn predict_dist_at(
            &mut self,
            _s: &SnapshotHandle,
            _q: &[f64],
        ) -> Result<PredictiveDistribution, PredictError> {
            Ok(PredictiveDistribution::gaussian(self.mean, self.var)?)
        }
    }

    /// Hands out constant models whose means follow `means` in creation order.
    fn constant_factory(means: Vec<f64>, var: f64) -> ModelFactory {
        let next = AtomicUsize::new(0);
        Arc::new(move |dim| {
            let i = next.fetch_add(1, Ordering::SeqCst);
            Ok(Box::new(Constant {
                dim,
                n: 0,
                mean: means[i % means.len()],
                var,
            }) as Box<dyn PredictiveModel>)
        })
    }

    fn fixed(mode: EncodingMode, rule: DecisionRule) -> PfnConfig {
        PfnConfig {
            encoding: mode,
            rule,
            v_floor: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn warmup_is_round_robin() {
        let mut a = PfnTs::new("pfn", 3, 1, &conjugate_factory(1.0, 1.0), PfnConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(a.act(&[0.5], 3, &mut rng).unwrap(), 2);
        let mut counts = [0; 3];
        for t in 1..=15 {
            let arm = a.act(&[0.5], t, &mut rng).unwrap();
            counts[arm] += 1;
            a.update(&[0.5], arm, 1.0, t).unwrap();
        }
        assert_eq!(counts, [5, 5, 5]);
    }

    #[test]
    fn degenerate_draws_pick_the_best_arm() {
        let f = constant_factory(vec![0.9, 0.1], 1.0);
        let mut a = PfnTs::new("pfn", 2, 1, &f, fixed(EncodingMode::Disjoint, DecisionRule::Thompson)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in 1..=10 {
            a.update(&[0.0], (t - 1) % 2, 0.0, t).unwrap();
        }
        for t in 11..200 {
            assert_eq!(a.act(&[0.0], t, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn identical_arms_tie_evenly() {
        let f = constant_factory(vec![0.5, 0.5], 1.0);
        let mut a = PfnTs::new("pfn", 2, 1, &f, fixed(EncodingMode::Disjoint, DecisionRule::Thompson)).unwrap();
        for t in 1..=10 {
            a.update(&[0.0], (t - 1) % 2, 0.0, t).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let zeros = (0..n).filter(|_| a.act(&[0.0], 11, &mut rng).unwrap() == 0).count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.05);
    }

    #[test]
    fn common_shift_leaves_choices_unchanged() {
        let run = |shift: f64| {
            let f = constant_factory(vec![0.3 + shift, 0.2 + shift, 0.25 + shift], 1.0);
            let cfg = PfnConfig {
                encoding: EncodingMode::Disjoint,
                v_fallback: 0.5,
                ..Default::default()
            };
            let mut a = PfnTs::new("pfn", 3, 1, &f, cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            (16..500).map(|t| a.act(&[0.0], t, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(0.0), run(8.0));
    }

    #[test]
    fn greedy_and_point_mass_sampling() {
        let f = constant_factory(vec![0.2, 0.8], 0.0);
        for rule in [DecisionRule::Greedy, DecisionRule::PredictiveSampling] {
            let mut a = PfnTs::new("pfn", 2, 1, &f, fixed(EncodingMode::Disjoint, rule)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            assert_eq!(a.act(&[0.0], 11, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn predictive_sampling_matches_normal_difference() {
        // arm 0 ~ N(0.2, 1), arm 1 ~ N(0, 0.5): P(arm 0) = Phi(0.2 / sqrt(1.5))
        struct Fixed(f64, f64);
        impl PredictiveModel for Fixed {
            fn input_dim(&self) -> usize {
                1
            }
            fn len(&self) -> usize {
                0
            }
            fn append(&mut self, _x: &[f64], _r: f64) -> Result<(), PredictError> {
                Ok(())
            }
            fn snapshot(&mut self, p: usize) -> Result<SnapshotHandle, PredictError> {
                Ok(SnapshotHandle::new(p, Arc::new(())))
            }
            fn predict_mean_at(&mut self, _s: &SnapshotHandle, _q: &[f64]) -> Result<f64, PredictError> {
                Ok(self.0)
            }
            fn predict_dist_at(
                &mut self,
                _s: &SnapshotHandle,
                _q: &[f64],
            ) -> Result<PredictiveDistribution, PredictError> {
                Ok(PredictiveDistribution::gaussian(self.0, self.1)?)
            }
        }
        let next = AtomicUsize::new(0);
        let f: ModelFactory = Arc::new(move |_| {
            let i = next.fetch_add(1, Ordering::SeqCst);
            Ok(Box::new(if i % 2 == 0 { Fixed(0.2, 1.0) } else { Fixed(0.0, 0.5) })
                as Box<dyn PredictiveModel>)
        });
        let cfg = PfnConfig {
            warmup: 0,
            ..fixed(EncodingMode::Disjoint, DecisionRule::PredictiveSampling)
        };
        let mut a = PfnTs::new("ps", 2, 1, &f, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 10_000;
        let zeros = (0..n).filter(|_| a.act(&[0.0], 1, &mut rng).unwrap() == 0).count();
        let want = crate::normal::cdf(0.2 / 1.5f64.sqrt());
        assert!((zeros as f64 / n as f64 - want).abs() < 0.02);
    }

    #[test]
    fn short_histories_use_the_fallback() {
        let mut a = PfnTs::new(
            "pfn",
            2,
            1,
            &conjugate_factory(1.0, 1.0),
            PfnConfig {
                v_fallback: 0.7,
                ..fixed(EncodingMode::Disjoint, DecisionRule::Thompson)
            },
        )
        .unwrap();
        a.update(&[1.0], 0, 2.0, 1).unwrap();
        let p = a.thompson_params(&[2.0]).unwrap();
        assert_eq!(p[0].refresh, None);
        assert_eq!(p[0].variance, 0.7);
        assert!((p[0].mean - 2.0).abs() < 1e-12);
        assert_eq!(p[1].mean, 0.0);
    }

    #[test]
    fn both_encodings_grow_until_the_last_switch() {
        let cfg = PfnConfig {
            switch_times: vec![8, 16],
            ..Default::default()
        };
        let mut a = PfnTs::new("pfn", 2, 1, &conjugate_factory(1.0, 1.0), cfg).unwrap();
        assert_eq!(a.active_encoding(), Encoding::Disjoint);
        for t in 1..=20 {
            a.update(&[t as f64 / 20.0], t % 2, 1.0, t).unwrap();
            if t < 16 {
                assert_eq!(a.challenger_len(), Some(t));
            } else {
                assert_eq!(a.challenger_len(), None);
                assert!(!a.dual_caching());
            }
        }
        assert_eq!(a.switch_events().len(), 2);
    }

    #[test]
    fn adaptive_initial_encoding_follows_arm_threshold() {
        let f = conjugate_factory(1.0, 1.0);
        let a = PfnTs::new("pfn", 5, 2, &f, PfnConfig::default()).unwrap();
        assert_eq!(a.active_encoding(), Encoding::OneHot);
        assert_eq!(a.challenger_encoding(), Some(Encoding::Disjoint));
        let b = PfnTs::new("pfn", 4, 2, &f, PfnConfig::default()).unwrap();
        assert_eq!(b.active_encoding(), Encoding::Disjoint);
    }

    fn scores(crps_active: f64, crps_challenger: f64) -> PfnTs {
        let f = conjugate_factory(1.0, 1.0);
        let mut a = PfnTs::new("pfn", 2, 1, &f, PfnConfig::default()).unwrap();
        a.active.crps = crps_active;
        a.challenger.as_mut().unwrap().crps = crps_challenger;
        a
    }

    #[test]
    fn switch_requires_strictly_lower_score() {
        let mut a = scores(5.0, 4.0);
        a.switch(64).unwrap();
        assert_eq!(a.active_encoding(), Encoding::OneHot);
        assert_eq!(a.cumulative_crps(), (4.0, Some(5.0)));
        assert!(a.switch_events()[0].swapped);

        let mut b = scores(4.0, 4.0);
        b.switch(64).unwrap();
        assert_eq!(b.active_encoding(), Encoding::Disjoint);
        assert!(!b.switch_events()[0].swapped);
    }

    #[test]
    fn after_swap_updates_reach_the_new_active_history() {
        let mut a = scores(5.0, 4.0);
        a.switch(64).unwrap();
        a.update(&[0.3], 1, 1.0, 65).unwrap();
        assert_eq!(a.active.models[0].len(), 1);
        assert_eq!(a.active.encoding, Encoding::OneHot);
    }

    #[test]
    fn replay_is_deterministic() {
        let run = || {
            let mut a = PfnTs::new("pfn", 3, 2, &conjugate_factory(1.0, 1.0), PfnConfig::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            let mut acts = Vec::new();
            for t in 1..=300 {
                let x = [(t as f64 * 0.37).fract(), (t as f64 * 0.61).fract()];
                let arm = a.act(&x, t, &mut rng).unwrap();
                a.update(&x, arm, x[0] * arm as f64 + rng.random::<f64>(), t).unwrap();
                acts.push(arm);
            }
            (acts, a.cumulative_crps())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn snapshot_means_stay_fixed_between_refresh_points() {
        let cfg = fixed(EncodingMode::Disjoint, DecisionRule::Thompson);
        let mut a = PfnTs::new("pfn", 1, 1, &conjugate_factory(1.0, 1.0), cfg).unwrap();
        for t in 1..=16 {
            a.update(&[t as f64 / 16.0], 0, t as f64 * 0.1, t).unwrap();
        }
        let at16 = a.thompson_params(&[0.7]).unwrap()[0];
        for t in 17..=31 {
            a.update(&[0.5], 0, 3.0, t).unwrap();
            let p = a.thompson_params(&[0.7]).unwrap()[0];
            assert_eq!(p, at16);
        }
        a.update(&[0.5], 0, 3.0, 32).unwrap();
        assert_ne!(a.thompson_params(&[0.7]).unwrap()[0].mean, at16.mean);
    }

    #[test]
    fn rejects_bad_config() {
        let f = conjugate_factory(1.0, 1.0);
        let bad = PfnConfig {
            switch_times: vec![10, 5],
            ..Default::default()
        };
        assert!(PfnTs::new("pfn", 2, 1, &f, bad).is_err());
        let bad = PfnConfig {
            base: 1.0,
            ..Default::default()
        };
        assert!(PfnTs::new("pfn", 2, 1, &f, bad).is_err());
    }
}
