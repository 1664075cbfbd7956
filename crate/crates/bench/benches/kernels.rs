use std::hint::black_box;

use advosc_core::canonical::check_noncanonical;
use advosc_core::criteria::{kernel_j, kernel_window, Condition, EvalOptions, Evaluator, WindowKind};
use advosc_core::euler::{euler_reduce, EulerSpec};
use advosc_core::model::{validate_spec, AdvancedArgument, CoefficientFunction, RawSpec};
use criterion::{criterion_group, criterion_main, Criterion};

fn fractional() -> advosc_core::EquationSpec {
    validate_spec(RawSpec {
        r1: CoefficientFunction::power_law(1.0, 4.0),
        r2: CoefficientFunction::power_law(1.0, 3.0),
        q: CoefficientFunction::power_law(1.0, 6.0),
        sigma: AdvancedArgument::proportional(2.0),
        alpha: "5/3".into(),
        beta: "1/7".into(),
        gamma: "9/5".into(),
        t0: 1.0,
    })
    .unwrap()
}

fn kernels(c: &mut Criterion) {
    let spec = fractional();
    c.bench_function("kernel_j t=100", |b| b.iter(|| kernel_j(&spec, 1.0, black_box(100.0), None).unwrap()));
    let family = EulerSpec::example_shape(2.5, 1.2, 3.0, 2.0).to_equation().unwrap();
    c.bench_function("kernel_window single t=100", |b| {
        b.iter(|| kernel_window(&family, black_box(100.0), WindowKind::Single).unwrap())
    });
}

fn closed_forms(c: &mut Criterion) {
    let es = EulerSpec::example_shape(2.5, 1.2, 3.0, 2.0);
    c.bench_function("euler_reduce window", |b| b.iter(|| euler_reduce(black_box(&es), &Condition::Window).unwrap()));
    c.bench_function("window closed form (wide)", |b| {
        b.iter(|| es.window_closed_form(WindowKind::Single, black_box(10.0)).unwrap())
    });
}

fn theorem(c: &mut Criterion) {
    let spec = EulerSpec::example_shape(2.0, 1.0, 3.0, 2.0).to_equation().unwrap();
    let profile = check_noncanonical(&spec).unwrap();
    let id = "T2_8".parse().unwrap();
    let mut group = c.benchmark_group("theorem");
    group.sample_size(10);
    group.bench_function("two-window theorem, auto path", |b| {
        b.iter(|| Evaluator::new(&spec, &profile, EvalOptions::default()).evaluate(&id).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernels, closed_forms, theorem);
criterion_main!(benches);
