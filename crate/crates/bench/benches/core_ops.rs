use criterion::{black_box, criterion_group, criterion_main, Criterion};

use engel_core::constructions::cartan_prolongation;
use engel_core::engel::check_generalized_engel;
use engel_core::moser::{moser_field_at, OneParamFamily};
use engel_core::sample::SamplePlan;
use engel_core::{
    exterior_derivative, lie_bracket, wedge, Chart, ExtForm, PolyScalar, Rational,
};

fn engel_pair() -> (engel_core::ChartRef, ExtForm, ExtForm) {
    let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
    let y = PolyScalar::var(&ch, 1);
    let w = PolyScalar::var(&ch, 3);
    let theta = ExtForm::d_coord(&ch, 2)
        .add(&ExtForm::d_coord(&ch, 0).scale_poly(&-&y).unwrap())
        .unwrap();
    let omega = ExtForm::d_coord(&ch, 1)
        .add(&ExtForm::d_coord(&ch, 0).scale_poly(&-&w).unwrap())
        .unwrap();
    (ch, theta, omega)
}

fn bench_bracket(c: &mut Criterion) {
    let pc = cartan_prolongation(2).unwrap();
    let gens = pc.d.generators();
    c.bench_function("lie_bracket prolongation n=2", |b| {
        b.iter(|| {
            for x in gens {
                for y in gens {
                    black_box(lie_bracket(black_box(x), black_box(y)).unwrap());
                }
            }
        })
    });
}

fn bench_wedge_d(c: &mut Criterion) {
    let (_, theta, omega) = engel_pair();
    c.bench_function("d(theta) ^ d(omega)", |b| {
        b.iter(|| {
            let dt = exterior_derivative(black_box(&theta));
            let dw = exterior_derivative(black_box(&omega));
            black_box(wedge(&dt, &dw).unwrap());
        })
    });
}

fn bench_engel_check(c: &mut Criterion) {
    let pc = cartan_prolongation(1).unwrap();
    let pts = SamplePlan::new(5, 1).points(&pc.chart);
    c.bench_function("check_generalized_engel n=1, 5 points", |b| {
        b.iter(|| black_box(check_generalized_engel(black_box(&pc.d), &pts).unwrap()))
    });
}

fn bench_moser_solve(c: &mut Criterion) {
    let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
    let ext = OneParamFamily::parameter_chart(&ch).unwrap();
    let y = PolyScalar::var(&ext, 1);
    let w = PolyScalar::var(&ext, 3);
    let t = PolyScalar::var(&ext, 4);
    let theta = ExtForm::d_coord(&ext, 2)
        .add(&ExtForm::d_coord(&ext, 0).scale_poly(&-&y).unwrap())
        .unwrap();
    let omega = ExtForm::d_coord(&ext, 1)
        .add(&ExtForm::d_coord(&ext, 0).scale_poly(&-&(&w + &t)).unwrap())
        .unwrap();
    let fam = OneParamFamily::new(ch.clone(), theta, vec![omega]).unwrap();
    let mut rng = SamplePlan::new(1, 7).rng();
    let p = SamplePlan::point_from_rng(&ch, &mut rng);
    let tv = Rational::new(1.into(), 3.into());
    c.bench_function("moser_field_at translation family", |b| {
        b.iter(|| black_box(moser_field_at(black_box(&fam), &tv, &p).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_bracket,
    bench_wedge_d,
    bench_engel_check,
    bench_moser_solve
);
criterion_main!(benches);
