use evbet_core::betting::StrategySpec;
use evbet_core::confseq::{mu_grid, run_cs, CsInterval, MembershipRow};
use evbet_core::domain::{DiscreteDistribution, SampleSpace};
use evbet_core::evariables::{eval_hoeffding, TabulatedEVariable};
use evbet_core::game::{compare_schedule, run_game, AlphaSchedule, ComparisonRow, LedgerRow};
use evbet_core::io::*;
use evbet_core::multiround::{MultiRoundCoinBet, PairTable, TabulatedProcess};
use evbet_core::UniversalPortfolio;

fn stream() -> Vec<f64> {
    DiscreteDistribution::uniform_grid(11).unwrap().sample_stream(50, 3)
}

#[test]
fn ledger_round_trips_with_integer_flags() {
    let mut s = UniversalPortfolio::new(0.2, 101).unwrap();
    let ledger = run_game(0.2, 0.05, &mut s, &stream());
    let mut buf = Vec::new();
    write_csv(&mut buf, ledger.rows()).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,x,lambda,e_value,log_wealth,rejected\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0") || l.ends_with(",1")));
    let back: Vec<LedgerRow> = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, ledger.rows());
}

#[test]
fn cs_tables_round_trip() {
    let state = run_cs(&stream(), mu_grid(9), 0.05, &StrategySpec::parse("up:51").unwrap(), false).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &state.intervals()).unwrap();
    assert!(buf.starts_with(b"t,lower,upper,alive\n"));
    let back: Vec<CsInterval> = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), 50);
    for (a, b) in back.iter().zip(state.intervals()) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.alive, b.alive);
        assert!(a.lower.to_bits() == b.lower.to_bits() || (a.lower.is_nan() && b.lower.is_nan()));
        assert!(a.upper.to_bits() == b.upper.to_bits() || (a.upper.is_nan() && b.upper.is_nan()));
    }

    let mut buf = Vec::new();
    write_csv(&mut buf, &state.membership_rows()).unwrap();
    assert!(buf.starts_with(b"t,mu,log_wealth,in_set\n"));
    let back: Vec<MembershipRow> = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, state.membership_rows());
}

#[test]
fn comparison_header_uses_wealth_names() {
    let rows = compare_schedule(0.5, &stream(), &AlphaSchedule::Constant(1.0));
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    assert!(buf.starts_with(b"t,logW_hoeffding,logW_coinbet,gap\n"));
    let back: Vec<ComparisonRow> = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
}

#[test]
fn evariable_and_distribution_tables_round_trip() {
    let space = SampleSpace::uniform(21, 0.3).unwrap();
    let e = TabulatedEVariable::from_fn(space, |x| eval_hoeffding(0.3, 1.7, x)).unwrap();
    let mut buf = Vec::new();
    write_evariable(&mut buf, &e).unwrap();
    assert_eq!(read_evariable(buf.as_slice(), 0.3).unwrap(), e);

    let d = DiscreteDistribution::new(vec![(0.0, 0.1), (0.3, 0.6), (1.0, 0.3)]).unwrap();
    let mut buf = Vec::new();
    write_distribution(&mut buf, &d).unwrap();
    assert_eq!(read_distribution(buf.as_slice()).unwrap(), d);
}

#[test]
fn pair_and_process_tables_round_trip() {
    let space = SampleSpace::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], 0.5).unwrap();
    let cb = MultiRoundCoinBet::from_fn(space.clone(), 2, |t, p| if t == 1 { 0.7 } else { p[0] as f64 * 0.3 - 0.6 })
        .unwrap();
    let table = PairTable::from_fn(space.clone(), |x, y| cb.eval_multiround(&[x, y]).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_pair_table(&mut buf, &table).unwrap();
    assert_eq!(read_pair_table(buf.as_slice(), 0.5).unwrap(), table);

    let proc = TabulatedProcess::from_process(&cb, space, 2).unwrap();
    let mut buf = Vec::new();
    write_process(&mut buf, &proc).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("depth,path,value\n0,,1.0\n"), "{text}");
    assert!(text.contains("\n2,\"0.25,1\","));
    assert_eq!(read_process(buf.as_slice(), 0.5).unwrap(), proc);
}

#[test]
fn malformed_tables_are_rejected() {
    assert!(read_distribution("point,mass\n0,0.5\n1,0.6\n".as_bytes()).is_err());
    assert!(read_distribution("point,weight\n0,1\n".as_bytes()).is_err());
    assert!(read_evariable("point,value\n0,-1\n1,1\n".as_bytes(), 0.5).is_err());
    assert!(read_pair_table("x1,x2,value\n0,0,1\n0,0,1\n".as_bytes(), 0.5).is_err());
    assert!(read_alphas("alpha\n1\nx\n".as_bytes()).is_err());
    assert_eq!(read_alphas("alpha\n1\n-2.5\n".as_bytes()).unwrap(), vec![1.0, -2.5]);
}
