use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eraprobe::analytics::kruskal_wallis;
use eraprobe::corpus::{segment_subset, Book, DecadeSubset};
use eraprobe::embedding::{build_vocab, cooccurrence_docs};
use eraprobe::entities::{extract_subset_entities, HeuristicExtractor};
use eraprobe::exec::Execution;
use eraprobe::tokenize::{lowercase_words, WordTokenizer};

const WORDS: &[&str] = &[
    "the", "house", "was", "quiet", "when", "Mary", "came", "home", "from", "Boston", "and",
    "John", "said", "nothing", "about", "letter", "she", "he", "nurse", "river",
];

fn synthetic_subset(books: usize, sentences: usize, seed: u64) -> DecadeSubset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let books = (0..books)
        .map(|b| {
            let mut text = String::new();
            for _ in 0..sentences {
                let n = rng.gen_range(5..25);
                let words: Vec<&str> = (0..n)
                    .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
                    .collect();
                let mut s = words.join(" ");
                s[..1].make_ascii_uppercase();
                text.push_str(&s);
                text.push_str(". ");
            }
            Book {
                title: format!("Book {b}"),
                content: text,
                year: 1955,
                authors: Vec::new(),
            }
        })
        .collect();
    DecadeSubset {
        start_year: 1950,
        books,
    }
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench_segmentation(c: &mut Criterion) {
    let subset = synthetic_subset(32, 2_000, 1);
    let mut g = c.benchmark_group("segment_subset");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| segment_subset(&subset, 8000, &WordTokenizer, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_entities(c: &mut Criterion) {
    let subset = synthetic_subset(32, 500, 2);
    let extractor = HeuristicExtractor::default();
    let mut g = c.benchmark_group("subset_entities");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| extract_subset_entities(&subset, &extractor, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_cooccurrence(c: &mut Criterion) {
    let subset = synthetic_subset(32, 1_000, 3);
    let docs: Vec<Vec<String>> = subset
        .books
        .iter()
        .map(|b| lowercase_words(&b.content))
        .collect();
    let vocab = build_vocab(&docs.concat(), 1).unwrap();
    let mut g = c.benchmark_group("cooccurrence_w10");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cooccurrence_docs(&docs, &vocab, 10, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_kruskal_wallis(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tables: Vec<Vec<Vec<f64>>> = (0..500)
        .map(|_| {
            (0..2)
                .map(|_| {
                    (0..14)
                        .map(|_| f64::from(rng.gen_range(0..50u32)) * 2.0)
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut g = c.benchmark_group("kruskal_wallis_500_tables");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(&tables, |t| kruskal_wallis(t).unwrap()))
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_segmentation, bench_entities, bench_cooccurrence, bench_kruskal_wallis
}
criterion_main!(benches);
