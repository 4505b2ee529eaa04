use bubble_fts::calibrate::{grid_search, search_prices, GridSpec};
use bubble_fts::models::{simulate_model1_sde, Model1Params, OuParams};
use bubble_fts::scanner::{alarm_from_calibration, calibrate_windows, cluster_alarms, scan, ScanConfig};
use bubble_fts::timeseries::{add_weekdays, slice_window};
use bubble_fts::unitroot::CriticalValueTable;
use bubble_fts::{parse_price_csv, BubbleModel, PriceSeries};
use chrono::NaiveDate;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2001, 1, 1).unwrap()
}

/// Flat prefix followed by a model-1 bubble run-up.
fn bubble_series(seed: u64) -> PriceSeries {
    let beta: f64 = 1.0 / 1.5;
    let p0 = 100.0f64;
    let mu = beta * p0.powf(-1.0 / beta) / 949.0;
    let p = Model1Params::new(mu, 2.5, p0).unwrap();
    let ou = OuParams::new(0.2, 7.5, 0.0).unwrap();
    let mut closes = vec![p0; 100];
    closes.extend(simulate_model1_sde(&p, &ou, 1.0, 749, seed).unwrap().prices);
    PriceSeries::from_closes_on_weekdays("SYN", start(), closes).unwrap()
}

#[test]
fn csv_round_trip_feeds_the_scanner() {
    let s = bubble_series(3);
    let back = parse_price_csv(&s.to_csv()).unwrap();
    assert_eq!(back.dates(), s.dates());
    for (a, b) in back.closes().iter().zip(s.closes()) {
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }
    let cfg = ScanConfig::new(BubbleModel::Price);
    assert_eq!(scan(&back, &cfg).unwrap().len(), scan(&s, &cfg).unwrap().len());
}

#[test]
fn final_window_of_a_bubble_raises_an_alarm() {
    let s = bubble_series(5);
    let cfg = ScanConfig::new(BubbleModel::Price);
    let cals = calibrate_windows(&s, &cfg).unwrap();
    assert_eq!(cals.len(), (s.len() - 750) / 25 + 1);
    let last = cals.last().unwrap();
    let alarm = alarm_from_calibration(last).expect("the last window ends 200 days before T_c");
    assert!(alarm.horizon_days > 100 && alarm.horizon_days < 300, "{}", alarm.horizon_days);
    assert_eq!(alarm.t_c_date, add_weekdays(alarm.window_end, alarm.horizon_days));
    assert!(alarm.m > 1.0);
}

#[test]
fn grid_search_matches_search_prices_on_the_same_window() {
    let s = bubble_series(8);
    let table = CriticalValueTable::shipped();
    let grid = GridSpec::default();
    let w = slice_window(&s, s.len() - 1, 750).unwrap();
    let r = grid_search(&w, BubbleModel::Price, &grid, &table).unwrap();
    let o = search_prices(w.closes(), BubbleModel::Price, &grid, table.get(750).unwrap()).unwrap();
    assert_eq!(r.elite, o.elite);
    assert_eq!(r.best, o.best);
    assert_eq!(r.window_end_date, *s.dates().last().unwrap());
    assert_eq!(r.t_c_hat, o.best.map(|b| b.t_c_hat));
    // every elite member's transform reproduces its recorded statistics
    for e in &r.elite {
        let path = e.point.transform(w.closes()).unwrap();
        assert!((path.t_c_hat - e.t_c_hat).abs() < 1e-6 * e.t_c_hat.abs().max(1.0));
        assert!((path.residual_variance() - e.variance).abs() <= 1e-6 * e.variance.max(1.0));
    }
}

#[test]
fn scan_is_independent_of_thread_count() {
    let s = bubble_series(11);
    let cfg = ScanConfig::new(BubbleModel::Price);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| scan(&s, &cfg).unwrap());
    let b = four.install(|| scan(&s, &cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn clusters_partition_the_alarms() {
    let s = bubble_series(2);
    let cfg = ScanConfig { step: 5, ..ScanConfig::new(BubbleModel::Price) };
    let alarms = scan(&s, &cfg).unwrap();
    let clusters = cluster_alarms(&alarms, 50);
    assert_eq!(clusters.iter().map(|c| c.members.len()).sum::<usize>(), alarms.len());
    for c in &clusters {
        assert!(c.start <= c.end);
        assert!(c.members.iter().any(|a| a.level == c.peak_level));
    }
}

#[test]
fn custom_table_and_window_length_are_honoured() {
    let s = bubble_series(4);
    let table = CriticalValueTable::build(&[600], 0.005, 10_000, 1).unwrap();
    let cfg = ScanConfig { window_length: 600, table, ..ScanConfig::new(BubbleModel::Price) };
    let cals = calibrate_windows(&s, &cfg).unwrap();
    assert!(cals.iter().all(|c| c.window_length == 600));
    // the shipped table has no entry for 600
    let bad = ScanConfig { window_length: 600, ..ScanConfig::new(BubbleModel::Price) };
    assert!(scan(&s, &bad).is_err());
}
