use healcrete::experiments::*;
use healcrete::surrogate::*;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let spec = DatasetSpec::desk();
    let out = generate_dataset(&spec, 1).unwrap();
    let ones: usize = out.rows.iter().map(|r| r.h as usize).sum();
    println!(
        "dataset: rows={} ones={:.1}% skipped={} gen={:?}",
        out.rows.len(),
        100.0 * ones as f64 / out.rows.len() as f64,
        out.skipped.len(),
        t0.elapsed()
    );
    let ds = Dataset::from_rows(out.rows.iter().map(|r| ([r.sigma, r.gamma, r.t], r.h))).unwrap();
    let s = split(&ds, 42).unwrap();
    let train = ds.subset(&s.train);
    let val = ds.subset(&s.validation);
    let test = ds.subset(&s.test);
    let hp = Hyper::default();
    for variant in Variant::ALL {
        let t1 = Instant::now();
        let model = fit(variant, &train, &val, &hp).unwrap();
        let t_fit = t1.elapsed();
        let t2 = Instant::now();
        let m = evaluate(&model, &test).unwrap();
        println!(
            "{:>7}: acc={:.4} prec={:.4} rec={:.4} f1={:.4} fit={:?} eval={:?}",
            variant.as_str(),
            m.accuracy,
            m.precision_weighted,
            m.recall_weighted,
            m.f1_weighted,
            t_fit,
            t2.elapsed()
        );
    }
    println!("total {:?}", t0.elapsed());
}
