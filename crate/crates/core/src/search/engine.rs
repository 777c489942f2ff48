//! Random and zero-order search over generator latents.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Algorithm, Neighborhood, SearchConfig};
use super::manifest::{CandidateRecord, RunManifest, SCHEMA_VERSION};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::rng::{derive_seed, sample_standard_noise, LatentNoise};
use crate::verifier::{select_best, Candidate, RawScores, SetEvaluation, TieBreak, Verifier};

/// Result of a run: the manifest plus the audio behind each record.
///
/// `audio[i]` belongs to `manifest.candidates[i]`; a carried-over pivot
/// shares its buffer with the record it came from.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub manifest: RunManifest,
    pub audio: Vec<Arc<AudioBuffer>>,
}

impl SearchOutcome {
    pub fn selected_audio(&self) -> &AudioBuffer {
        &self.audio[self.manifest.selected_index]
    }
}

/// `lambda * pivot + sqrt(1 - lambda^2) * eps` with `eps` drawn from `seed`.
pub fn perturb_noise(pivot: &LatentNoise, lambda: f64, seed: u64) -> Result<LatentNoise> {
    perturb_noise_in(pivot, lambda, seed, Neighborhood::Spherical)
}

pub fn perturb_noise_in(
    pivot: &LatentNoise,
    lambda: f64,
    seed: u64,
    neighborhood: Neighborhood,
) -> Result<LatentNoise> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let eps = sample_standard_noise(pivot.dim(), seed);
    let values = match neighborhood {
        Neighborhood::Spherical => {
            let mix = (1.0 - lambda * lambda).sqrt();
            pivot
                .values()
                .iter()
                .zip(eps.values())
                .map(|(n, e)| lambda * n + mix * e)
                .collect()
        }
        Neighborhood::Euclidean => {
            let norm = eps.norm();
            let step = if norm > 0.0 {
                lambda * (pivot.dim() as f64).sqrt() / norm
            } else {
                0.0
            };
            pivot
                .values()
                .iter()
                .zip(eps.values())
                .map(|(n, e)| n + step * e)
                .collect()
        }
    };
    LatentNoise::new(values)
}

/// Runs the configured algorithm.
pub fn run_search(
    lr: &AudioBuffer,
    generator: &dyn Generator,
    verifier: &Verifier,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    match config.algorithm {
        Algorithm::Random => random_search(lr, generator, verifier, config),
        Algorithm::ZeroOrder => zero_order_search(lr, generator, verifier, config),
    }
}

struct Evaluated {
    audio: Arc<AudioBuffer>,
    raw: RawScores,
}

struct Job {
    index: usize,
    noise: LatentNoise,
}

struct Engine<'a> {
    lr: &'a AudioBuffer,
    generator: &'a dyn Generator,
    verifier: &'a Verifier,
    pool: rayon::ThreadPool,
    calls: usize,
}

impl<'a> Engine<'a> {
    fn new(
        lr: &'a AudioBuffer,
        generator: &'a dyn Generator,
        verifier: &'a Verifier,
        config: &SearchConfig,
    ) -> Result<Self> {
        config.validate()?;
        lr.require_nonempty()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            lr,
            generator,
            verifier,
            pool,
            calls: 0,
        })
    }

    fn evaluate_one(&self, job: &Job) -> Result<Evaluated> {
        let audio = self.generator.generate(self.lr, &job.noise)?;
        let raw = self.verifier.raw_scores(&Candidate {
            index: job.index,
            audio: &audio,
            noise: &job.noise,
        })?;
        Ok(Evaluated {
            audio: Arc::new(audio),
            raw,
        })
    }

    /// Generates and scores `jobs` on the pool; the first failure in index
    /// order wins, so errors do not depend on scheduling.
    fn evaluate(&mut self, jobs: &[Job]) -> Result<Vec<Evaluated>> {
        self.calls += jobs.len();
        let results: Vec<Result<Evaluated>> = self
            .pool
            .install(|| jobs.par_iter().map(|j| self.evaluate_one(j)).collect());
        results
            .into_iter()
            .zip(jobs)
            .map(|(r, j)| r.map_err(|e| e.at_candidate(j.index)))
            .collect()
    }
}

fn record(index: usize, round: usize, noise_seed: u64, noise: &LatentNoise) -> CandidateRecord {
    CandidateRecord {
        index,
        round,
        noise_seed,
        noise_digest: noise.digest_hex(),
        parent: None,
        generated: true,
        scores: BTreeMap::new(),
        ranks: BTreeMap::new(),
        selected: false,
        artifact_path: None,
    }
}

fn apply_evaluation(records: &mut [CandidateRecord], eval: SetEvaluation) {
    for ((rec, scores), ranks) in records.iter_mut().zip(eval.scores).zip(eval.ranks) {
        rec.scores = scores;
        rec.ranks = ranks;
    }
}

fn manifest(
    config: &SearchConfig,
    generator: &dyn Generator,
    verifier: &Verifier,
    calls: usize,
    mut candidates: Vec<CandidateRecord>,
    selected_index: usize,
    wall_times_ms: BTreeMap<String, u64>,
) -> RunManifest {
    candidates[selected_index].selected = true;
    RunManifest {
        schema_version: SCHEMA_VERSION,
        config: *config,
        generator_info: generator.info(),
        verifier_specs: Vec::new(),
        verifier: verifier.name().to_string(),
        generator_calls: calls,
        candidates,
        selected_index,
        wall_times_ms,
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Best-of-N: `N` independent latents, one set-level ranking, top-1.
pub fn random_search(
    lr: &AudioBuffer,
    generator: &dyn Generator,
    verifier: &Verifier,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    let mut engine = Engine::new(lr, generator, verifier, config)?;
    let dim = generator.info().noise_dim;
    let n = config.budget_n;
    let seeds: Vec<u64> = (0..n).map(|i| derive_seed(config.master_seed, i as u64)).collect();
    let jobs: Vec<Job> = seeds
        .iter()
        .enumerate()
        .map(|(index, &s)| Job {
            index,
            noise: sample_standard_noise(dim, s),
        })
        .collect();
    let mut records: Vec<CandidateRecord> = jobs
        .iter()
        .zip(&seeds)
        .map(|(j, &s)| record(j.index, 0, s, &j.noise))
        .collect();
    let evaluated = engine.evaluate(&jobs)?;
    let gen_ms = elapsed_ms(start);
    log::info!("random search: {n} candidates scored in {gen_ms} ms");

    let raws: Vec<RawScores> = evaluated.iter().map(|e| e.raw.clone()).collect();
    let eval = verifier.evaluate_set(&raws)?;
    let selected = select_best(&eval.overall, TieBreak::LowestIndex)?;
    apply_evaluation(&mut records, eval);
    let audio = evaluated.into_iter().map(|e| e.audio).collect();

    let mut times = BTreeMap::new();
    times.insert("generate_and_score".to_string(), gen_ms);
    times.insert("total".to_string(), elapsed_ms(start));
    let calls = engine.calls;
    Ok(SearchOutcome {
        manifest: manifest(config, generator, verifier, calls, records, selected, times),
        audio,
    })
}

/// Elitist zero-order search.
///
/// Round `r` holds the pivot (position 0, reusing its cached output and raw
/// scores) and `K - 1` perturbations seeded by `derive_seed(master, r*K + k)`.
/// The round winner becomes the next pivot; ties keep the pivot. Ensemble
/// ranks are computed within each round.
pub fn zero_order_search(
    lr: &AudioBuffer,
    generator: &dyn Generator,
    verifier: &Verifier,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    let mut engine = Engine::new(lr, generator, verifier, config)?;
    if config.algorithm != Algorithm::ZeroOrder {
        return Err(Error::param("zero_order_search called with a random-search config"));
    }
    let dim = generator.info().noise_dim;
    let k = config.neighbors_k;
    let rounds = config.rounds();

    let pivot_seed0 = derive_seed(config.master_seed, 0);
    let mut pivot = Job {
        index: 0,
        noise: sample_standard_noise(dim, pivot_seed0),
    };
    let mut pivot_seed = pivot_seed0;
    let mut pivot_eval = engine.evaluate(std::slice::from_ref(&pivot))?.remove(0);
    let mut pivot_origin: Option<usize> = None;

    let mut records = Vec::with_capacity(rounds * k);
    let mut audio = Vec::with_capacity(rounds * k);
    let mut last_winner = 0;
    for r in 0..rounds {
        let base = r * k;
        let mut round_records = vec![CandidateRecord {
            parent: pivot_origin,
            generated: r == 0,
            ..record(base, r, pivot_seed, &pivot.noise)
        }];
        let mut seeds = Vec::with_capacity(k - 1);
        let mut jobs = Vec::with_capacity(k - 1);
        for j in 1..k {
            let seed = derive_seed(config.master_seed, (base + j) as u64);
            let noise = perturb_noise_in(&pivot.noise, config.lambda, seed, config.neighborhood)?;
            round_records.push(CandidateRecord {
                parent: Some(base),
                ..record(base + j, r, seed, &noise)
            });
            seeds.push(seed);
            jobs.push(Job { index: base + j, noise });
        }
        let fresh = engine.evaluate(&jobs)?;

        let mut raws = vec![pivot_eval.raw.clone()];
        raws.extend(fresh.iter().map(|e| e.raw.clone()));
        let eval = verifier.evaluate_set(&raws)?;
        let winner = select_best(&eval.overall, TieBreak::LowestIndex)?;
        log::debug!(
            "round {r}: winner {} score {}",
            base + winner,
            eval.overall[winner].value
        );
        apply_evaluation(&mut round_records, eval);

        audio.push(pivot_eval.audio.clone());
        audio.extend(fresh.iter().map(|e| e.audio.clone()));
        records.extend(round_records);

        if winner > 0 {
            let mut fresh = fresh;
            let mut jobs = jobs;
            pivot_eval = fresh.swap_remove(winner - 1);
            pivot = jobs.swap_remove(winner - 1);
            pivot_seed = seeds[winner - 1];
        }
        pivot_origin = Some(base + winner);
        last_winner = base + winner;
    }
    let gen_ms = elapsed_ms(start);
    log::info!(
        "zero-order search: {rounds} rounds, {} generator calls in {gen_ms} ms",
        engine.calls
    );

    let mut times = BTreeMap::new();
    times.insert("generate_and_score".to_string(), gen_ms);
    times.insert("total".to_string(), elapsed_ms(start));
    let calls = engine.calls;
    Ok(SearchOutcome {
        manifest: manifest(config, generator, verifier, calls, records, last_winner, times),
        audio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::GeneratorInfo;
    use crate::verifier::{Direction, FnScorer};
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Emits the first latent coordinate as a constant signal.
    struct Echo {
        calls: AtomicUsize,
        fail_on: Option<f64>,
    }

    impl Echo {
        fn new() -> Self {
            Self {
                calls: AtomicUsize::new(0),
                fail_on: None,
            }
        }
    }

    impl Generator for Echo {
        fn info(&self) -> GeneratorInfo {
            GeneratorInfo {
                noise_dim: 4,
                output_sample_rate_hz: 8000,
                deterministic: true,
            }
        }

        fn generate(&self, lr: &AudioBuffer, noise: &LatentNoise) -> Result<AudioBuffer> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let v = noise.values()[0];
            if self.fail_on.is_some_and(|t| v > t) {
                return Err(Error::param("boom"));
            }
            AudioBuffer::from_f64(&vec![v; lr.len()], lr.sample_rate_hz())
        }
    }

    fn first_sample() -> Verifier {
        Verifier::single(FnScorer::new("first", Direction::HigherBetter, |c| {
            Ok(c.audio.samples()[0] as f64)
        }))
    }

    fn lr() -> AudioBuffer {
        AudioBuffer::new(vec![0.0; 16], 8000).unwrap()
    }

    fn zo(budget_n: usize, neighbors_k: usize) -> SearchConfig {
        SearchConfig {
            algorithm: Algorithm::ZeroOrder,
            budget_n,
            neighbors_k,
            lambda: 0.9,
            master_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn perturb_boundaries() {
        let pivot = sample_standard_noise(32, 1);
        assert_eq!(perturb_noise(&pivot, 1.0, 9).unwrap(), pivot);
        assert_eq!(perturb_noise(&pivot, 0.0, 9).unwrap(), sample_standard_noise(32, 9));
        assert!(matches!(perturb_noise(&pivot, 1.01, 9), Err(Error::Param(_))));
        assert!(matches!(perturb_noise(&pivot, -0.1, 9), Err(Error::Param(_))));
    }

    #[test]
    fn euclidean_step_has_requested_radius() {
        let pivot = sample_standard_noise(64, 1);
        let y = perturb_noise_in(&pivot, 0.5, 3, Neighborhood::Euclidean).unwrap();
        let d: f64 = y
            .values()
            .iter()
            .zip(pivot.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((d / 64f64.sqrt() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_search_picks_argmax_and_counts_calls() {
        let g = Echo::new();
        let cfg = SearchConfig {
            budget_n: 10,
            master_seed: 3,
            ..Default::default()
        };
        let out = random_search(&lr(), &g, &first_sample(), &cfg).unwrap();
        let m = &out.manifest;
        assert_eq!(m.candidates.len(), 10);
        assert_eq!(m.generator_calls, 10);
        assert_eq!(g.calls.load(Ordering::SeqCst), 10);
        let firsts: Vec<f64> = (0..10)
            .map(|i| sample_standard_noise(4, derive_seed(3, i)).values()[0] as f32 as f64)
            .collect();
        let best = (0..10).fold(0, |b, i| if firsts[i] > firsts[b] { i } else { b });
        assert_eq!(m.selected_index, best);
        assert_eq!(m.candidates.iter().filter(|c| c.selected).count(), 1);
        assert_eq!(out.selected_audio().samples()[0] as f64, firsts[best]);
    }

    #[test]
    fn single_candidate_is_selected() {
        let cfg = SearchConfig {
            budget_n: 1,
            ..Default::default()
        };
        let out = random_search(&lr(), &Echo::new(), &first_sample(), &cfg).unwrap();
        assert_eq!(out.manifest.selected_index, 0);
    }

    #[test]
    fn zero_order_layout_and_budget() {
        let g = Echo::new();
        let out = zero_order_search(&lr(), &g, &first_sample(), &zo(11, 3)).unwrap();
        let m = &out.manifest;
        assert_eq!(m.candidates.len(), 9);
        assert_eq!(m.generator_calls, 1 + 3 * 2);
        assert_eq!(g.calls.load(Ordering::SeqCst), m.generator_calls);
        for (i, c) in m.candidates.iter().enumerate() {
            assert_eq!(c.index, i);
            assert_eq!(c.round, i / 3);
            if i % 3 == 0 {
                assert_eq!(c.generated, i == 0);
            } else {
                assert_eq!(c.parent, Some(i - i % 3));
                assert_eq!(c.noise_seed, derive_seed(5, i as u64));
            }
        }
        assert_eq!(m.selected_index / 3, 2);
    }

    #[test]
    fn zero_order_pivot_chain_is_elitist() {
        let out = zero_order_search(&lr(), &Echo::new(), &first_sample(), &zo(40, 2)).unwrap();
        let m = &out.manifest;
        let mut prev = f64::NEG_INFINITY;
        for r in 0..20 {
            let round = &m.candidates[2 * r..2 * r + 2];
            let best = round.iter().map(|c| c.scores["first"].value).fold(f64::NEG_INFINITY, f64::max);
            assert!(best >= prev);
            prev = best;
            if r > 0 {
                let carried = &round[0];
                let from = &m.candidates[carried.parent.unwrap()];
                assert_eq!(carried.noise_digest, from.noise_digest);
                assert_eq!(carried.scores["first"], from.scores["first"]);
            }
        }
        assert_eq!(m.selected().scores["first"].value, prev);
    }

    #[test]
    fn k_one_never_moves() {
        let g = Echo::new();
        let out = zero_order_search(&lr(), &g, &first_sample(), &zo(5, 1)).unwrap();
        assert_eq!(g.calls.load(Ordering::SeqCst), 1);
        assert!(out.manifest.candidates.iter().all(|c| c.noise_seed == derive_seed(5, 0)));
        assert_eq!(out.manifest.selected_index, 4);
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let base = SearchConfig {
            budget_n: 24,
            ..Default::default()
        };
        let one = random_search(&lr(), &Echo::new(), &first_sample(), &base).unwrap();
        let four = random_search(
            &lr(),
            &Echo::new(),
            &first_sample(),
            &SearchConfig { parallelism: 4, ..base },
        )
        .unwrap();
        assert_eq!(one.manifest.candidates, four.manifest.candidates);
        let z1 = zero_order_search(&lr(), &Echo::new(), &first_sample(), &zo(30, 3)).unwrap();
        let z4 = zero_order_search(
            &lr(),
            &Echo::new(),
            &first_sample(),
            &SearchConfig {
                parallelism: 4,
                ..zo(30, 3)
            },
        )
        .unwrap();
        assert_eq!(z1.manifest.candidates, z4.manifest.candidates);
    }

    #[test]
    fn failure_reports_lowest_failing_index() {
        let g = Echo {
            calls: AtomicUsize::new(0),
            fail_on: Some(0.5),
        };
        let cfg = SearchConfig {
            budget_n: 32,
            parallelism: 4,
            ..Default::default()
        };
        let first_bad = (0..32)
            .find(|&i| sample_standard_noise(4, derive_seed(0, i)).values()[0] > 0.5)
            .unwrap() as usize;
        match random_search(&lr(), &g, &first_sample(), &cfg) {
            Err(Error::Candidate { index, .. }) => assert_eq!(index, first_bad),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_algorithm_rejected() {
        let cfg = SearchConfig::default();
        assert!(zero_order_search(&lr(), &Echo::new(), &first_sample(), &cfg).is_err());
    }
}
