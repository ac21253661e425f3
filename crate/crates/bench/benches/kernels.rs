use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use evbet_core::betting::{BettingStrategy, StrategySpec, UniversalPortfolio};
use evbet_core::confseq::{mu_grid, ConfidenceState};
use evbet_core::domain::{DiscreteDistribution, SampleSpace};
use evbet_core::evariables::{beta_interval, check_evariable, eval_hoeffding, TabulatedEVariable};
use evbet_core::multiround::{audit_eprocess, dominate_t2, MultiRoundCoinBet, PairTable};

fn up_update(c: &mut Criterion) {
    let xs = DiscreteDistribution::bernoulli(0.3).unwrap().sample_stream(1024, 1);
    c.bench_function("up_update_k1001", |b| {
        let mut up = UniversalPortfolio::new(0.3, 1001).unwrap();
        let mut i = 0;
        b.iter(|| {
            up.observe(black_box(xs[i % xs.len()]));
            i += 1;
            up.bet()
        })
    });
}

fn cs_round(c: &mut Criterion) {
    let xs = DiscreteDistribution::bernoulli(0.3).unwrap().sample_stream(100, 2);
    let spec = StrategySpec::parse("up").unwrap();
    c.bench_function("cs_100_rounds_grid99", |b| {
        b.iter(|| {
            let mut s = ConfidenceState::new(mu_grid(99), 0.05, &spec, false).unwrap();
            s.extend(black_box(&xs));
            s.cs_interval(100)
        })
    });
}

fn validity(c: &mut Criterion) {
    let space = SampleSpace::uniform(1001, 0.4).unwrap();
    let e = TabulatedEVariable::from_fn(space, |x| eval_hoeffding(0.4, 2.0, x)).unwrap();
    c.bench_function("check_evariable_g1001", |b| b.iter(|| check_evariable(black_box(&e))));
    c.bench_function("beta_interval_g1001", |b| b.iter(|| beta_interval(black_box(&e)).unwrap()));
}

fn multiround(c: &mut Criterion) {
    let space = SampleSpace::uniform(5, 0.5).unwrap();
    let cb = MultiRoundCoinBet::from_fn(space.clone(), 3, |t, p| (t as f64 - p.len() as f64 * 0.5).sin()).unwrap();
    c.bench_function("audit_t3_coarse3_random100", |b| {
        b.iter(|| audit_eprocess(black_box(&cb), 3, &[0.0, 0.5, 1.0], 100, 7).unwrap())
    });
    let grid = SampleSpace::uniform(11, 0.5).unwrap();
    let table = PairTable::from_fn(grid, |x, y| (1.0 + 0.5 * (x - 0.5)) * (1.0 - (y - 0.5))).unwrap();
    c.bench_function("dominate_t2_g11", |b| b.iter(|| dominate_t2(black_box(&table))));
}

criterion_group!(benches, up_update, cs_round, validity, multiround);
criterion_main!(benches);
