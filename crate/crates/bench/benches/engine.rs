//! Engine benchmarks: completion builds, incremental updates and the
//! verification pipeline.

use std::sync::Arc;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use rand::prelude::*;

use fwdcheck_core::algebra::{RuleCollection, WeakCompletion};
use fwdcheck_core::headerset::{HeaderLayout, HeaderSet};
use fwdcheck_core::network::ClassAnalysis;
use fwdcheck_core::oracle::gen::{self, LayoutFlavor, NetworkParams};

fn prefix_rules(n: usize, width: u32, seed: u64) -> RuleCollection {
    let layout = HeaderLayout::single_mask("dst", width);
    let mut rng = gen::rng(seed);
    let mut rules = RuleCollection::new(Arc::clone(&layout));
    while rules.len() < n {
        let len = rng.gen_range(1..=width);
        let bits: u128 = rng.gen_range(0..(1u128 << width));
        let text: String = (0..width)
            .map(|i| {
                if i < len {
                    if bits >> (width - 1 - i) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                } else {
                    '*'
                }
            })
            .collect();
        rules
            .insert(HeaderSet::parse(&layout, [("dst", text.as_str())]).unwrap())
            .unwrap();
    }
    rules
}

fn bench_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for n in [100usize, 300, 1000] {
        let rules = prefix_rules(n, 32, 1);
        group.bench_with_input(BenchmarkId::new("prefix_rules", n), &rules, |b, rules| {
            b.iter(|| WeakCompletion::build(rules))
        });
    }
    for n in [8usize, 12] {
        let layout = gen::layout(LayoutFlavor::MaskRangeProduct {
            mask_width: 6,
            range_width: 6,
        });
        let mut rng = gen::rng(2);
        let rules = gen::random_rules(&mut rng, &layout, n, 0.5);
        group.bench_with_input(BenchmarkId::new("random_product", n), &rules, |b, rules| {
            b.iter(|| WeakCompletion::build(rules))
        });
    }
    group.finish();
}

fn bench_updates(c: &mut Criterion) {
    let mut group = c.benchmark_group("update");
    group.sample_size(20).measurement_time(Duration::from_secs(15));
    let rules = prefix_rules(500, 32, 3);
    let baseline = WeakCompletion::build(&rules);
    let extra = {
        let layout = rules.layout();
        HeaderSet::parse(layout, [("dst", "01100110011001100110************")]).unwrap()
    };
    group.bench_function("insert_then_delete_500", |b| {
        b.iter_batched(
            || baseline.clone(),
            |mut completion| {
                completion.insert_rule(&extra).unwrap();
                completion.delete_rule(&extra).unwrap();
                completion
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn bench_verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify");
    group.sample_size(20);
    let layout = gen::layout(LayoutFlavor::SingleMask { width: 16 });
    let mut rng = gen::rng(4);
    let net = gen::random_network(
        &mut rng,
        &layout,
        NetworkParams {
            nodes: 12,
            extra_links: 6,
            max_rules_per_table: 8,
            wildcard_density: 0.5,
        },
    );
    group.bench_function("class_graphs_and_no_loop", |b| {
        b.iter(|| {
            let analysis = ClassAnalysis::new(&net);
            (analysis.class_graphs().len(), analysis.no_loop().passed())
        })
    });
    group.finish();
}

criterion_group!(benches, bench_build, bench_updates, bench_verification);
criterion_main!(benches);
