use hdltex_core::baselines::{nb_classify, nb_fit, nb_posterior};
use hdltex_core::corpus::{clean_text, stratified_split, Dataset};
use hdltex_core::features::{build_vocab, count_ngrams, encode_sequence, tfidf_vector, tokenize, EmbeddingTable};
use hdltex_core::hierarchy::{combined_accuracy, evaluate_hierarchy, predict_document, train_hierarchy, HdltexConfig, ModelKind};
use hdltex_core::nn::gradcheck::{grad_check, GradCheckConfig};
use hdltex_core::nn::{softmax, Activation, Batch, DnnSpec, Input, NoClock};
use hdltex_core::optim::{OptimizerConfig, OptimizerState};
use hdltex_core::features::SparseVector;
use hdltex_core::Tensor;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-e]{1,2}", 0..40)
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-700.0f64..700.0, 1..20), near in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let p = softmax(&z);
        prop_assert!(p.iter().all(|&x| x.is_finite() && x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(softmax(&near).iter().all(|&x| x > 0.0));
    }

    #[test]
    fn clean_text_alphabet(raw in ".{0,80}") {
        let out = clean_text(&raw);
        prop_assert!(out.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == ' '));
        prop_assert!(!out.contains("  "));
        prop_assert_eq!(out.trim(), out.as_str());
    }

    #[test]
    fn unigram_counts_sum_to_length(doc in words()) {
        prop_assume!(!doc.is_empty());
        let vocab = build_vocab(&[doc.clone()], 1, 1, usize::MAX).unwrap();
        let counts = count_ngrams(&doc, &vocab);
        prop_assert_eq!(counts.entries().iter().map(|e| e.1).sum::<f64>(), doc.len() as f64);
        let mut reversed = doc.clone();
        reversed.reverse();
        prop_assert_eq!(count_ngrams(&reversed, &vocab), counts);
    }

    #[test]
    fn tfidf_unit_norm(docs in prop::collection::vec(words(), 1..6)) {
        prop_assume!(docs.iter().any(|d| !d.is_empty()));
        let vocab = build_vocab(&docs, 2, 1, 1000).unwrap();
        let counts: Vec<SparseVector> = docs.iter().map(|d| count_ngrams(d, &vocab)).collect();
        let idf = hdltex_core::features::fit_idf(&counts, &vocab).unwrap();
        for c in &counts {
            let v = tfidf_vector(c, &idf).unwrap();
            if c.nnz() > 0 {
                prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            } else {
                prop_assert_eq!(v.nnz(), 0);
            }
        }
    }

    #[test]
    fn encoded_rows_are_table_rows(doc in words(), max_len in 1usize..50) {
        let tokens: Vec<&str> = doc.iter().map(String::as_str).collect();
        let table = EmbeddingTable::random(tokens.iter().copied(), 3, 9).unwrap();
        let s = encode_sequence(&tokens, &table, max_len).unwrap();
        prop_assert_eq!(s.len(), tokens.len().min(max_len));
        for (i, t) in tokens.iter().take(max_len).enumerate() {
            prop_assert_eq!(s.row(i), table.get(t).unwrap());
        }
        for i in s.len()..max_len {
            prop_assert!(s.row(i).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn split_partitions(sizes in prop::collection::vec(2usize..12, 1..6), frac in 0.05f64..0.95, seed in any::<u64>()) {
        let mut rows = Vec::new();
        for (c, &n) in sizes.iter().enumerate() {
            for k in 0..n {
                rows.push((format!("P{}", c % 2), format!("c{c}"), format!("doc {k}")));
            }
        }
        let ds = Dataset::from_records("p", rows).unwrap();
        let (train, test) = stratified_split(&ds, frac, seed).unwrap();
        let a: BTreeSet<usize> = train.documents.iter().map(|d| d.id).collect();
        let b: BTreeSet<usize> = test.documents.iter().map(|d| d.id).collect();
        prop_assert!(a.is_disjoint(&b));
        prop_assert_eq!(a.len() + b.len(), ds.len());
        let (train2, _) = stratified_split(&ds, frac, seed).unwrap();
        prop_assert_eq!(train2, train);
    }

    #[test]
    fn zero_gradients_leave_parameters(start in prop::collection::vec(-5.0f64..5.0, 1..8), steps in 1usize..30) {
        for cfg in [OptimizerConfig::sgd(0.1, 0.9), OptimizerConfig::rmsprop(0.1), OptimizerConfig::adam(0.1)] {
            let mut state = OptimizerState::new(cfg);
            let mut t = Tensor::from_vec(&[start.len()], start.clone()).unwrap();
            for _ in 0..steps {
                state.step(&mut [&mut t], &[Tensor::zeros(&[start.len()])]).unwrap();
            }
            prop_assert_eq!(t.data(), start.as_slice());
        }
    }

    #[test]
    fn combined_accuracy_monotone(p in 0.0f64..1.0, accs in prop::collection::vec((0.0f64..1.0, 1usize..500), 1..8), k in 0usize..8, bump in 0.0f64..0.5) {
        let base = combined_accuracy(p, &accs).unwrap();
        prop_assert!(combined_accuracy((p + bump).min(1.0), &accs).unwrap() >= base);
        let mut up = accs.clone();
        let k = k % up.len();
        up[k].0 = (up[k].0 + bump).min(1.0);
        prop_assert!(combined_accuracy(p, &up).unwrap() >= base - 1e-15);
    }

    #[test]
    fn nb_posterior_normalised_and_prior_shift_invariant(
        docs in prop::collection::vec(prop::collection::vec(0u8..4, 6), 3..9),
        query in prop::collection::vec(0u8..5, 6),
        shift in -50.0f64..50.0,
    ) {
        let sv = |v: &[u8]| SparseVector::from_pairs(6, v.iter().map(|&c| f64::from(c)).enumerate().collect()).unwrap();
        let counts: Vec<SparseVector> = docs.iter().map(|d| sv(d)).collect();
        let labels: Vec<usize> = (0..docs.len()).map(|i| i % 3).collect();
        let model = nb_fit(&counts, &labels, 3, 1.0).unwrap();
        let post = nb_posterior(&model, &sv(&query)).unwrap();
        prop_assert!((post.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut shifted = model.clone();
        shifted.class_log_prior.iter_mut().for_each(|l| *l += shift);
        prop_assert_eq!(nb_classify(&shifted, &sv(&query)).unwrap(), nb_classify(&model, &sv(&query)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dense_gradients_match_differences(
        input in 1usize..7,
        width in 1usize..7,
        depth in 0usize..3,
        classes in 2usize..5,
        act in prop::sample::select(vec![Activation::Relu, Activation::Sigmoid, Activation::Tanh]),
        seed in any::<u64>(),
    ) {
        let mut net = DnnSpec { input_dim: input, num_classes: classes, hidden_layers: depth, width, dropout: 0.3, activation: act }
            .build(seed)
            .unwrap();
        for b in net.params_mut().into_iter().filter(|t| t.rank() == 1) {
            b.data_mut().iter_mut().enumerate().for_each(|(i, v)| *v = 0.05 * (i as f64 + 1.0));
        }
        let xs: Vec<Input> = (0..3).map(|k| Input::Dense((0..input).map(|i| ((i + k) as f64 * 0.7).sin()).collect())).collect();
        let targets: Vec<usize> = (0..3).map(|k| k % classes).collect();
        let batch = Batch::new(xs.iter().collect(), targets).unwrap();
        let report = grad_check(&mut net, &batch, &GradCheckConfig { epsilon: 1e-4, samples_per_tensor: 6, seed }).unwrap();
        prop_assert!(report.max_relative_error < 1e-4, "{:?}", report.worst);
    }

    #[test]
    fn batch_loss_permutation_invariant(seed in any::<u64>(), rot in 0usize..4) {
        let net = DnnSpec { input_dim: 3, num_classes: 3, hidden_layers: 1, width: 5, dropout: 0.0, activation: Activation::Tanh }
            .build(seed)
            .unwrap();
        let xs: Vec<Input> = (0..4).map(|k| Input::Dense(vec![k as f64, 1.0 - k as f64, 0.5])).collect();
        let t = vec![0, 1, 2, 1];
        let base = net.loss(&Batch::new(xs.iter().collect(), t.clone()).unwrap(), None).unwrap();
        let mut idx: Vec<usize> = (0..4).collect();
        idx.rotate_left(rot);
        let perm = Batch::new(idx.iter().map(|&i| &xs[i]).collect(), idx.iter().map(|&i| t[i]).collect()).unwrap();
        prop_assert!((net.loss(&perm, None).unwrap() - base).abs() < 1e-12);
    }
}

fn toy_corpus() -> Dataset {
    let mut rows = Vec::new();
    for p in 0..2 {
        for c in 0..2 {
            for k in 0..5 {
                rows.push((format!("P{p}"), format!("c{p}{c}"), format!("t{p} s{p}{c} s{p}{c} n{}", k % 2)));
            }
        }
    }
    Dataset::from_records("toy", rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn routed_child_within_predicted_parent(text in "[a-z0-9 ]{0,40}") {
        let ds = toy_corpus();
        let cfg = HdltexConfig { parent_kind: ModelKind::Nbc, child_kind: ModelKind::Nbc, ..Default::default() };
        let model = train_hierarchy(&cfg, &ds, None, &mut |_, _| {}, &NoClock).unwrap();
        let pred = predict_document(&model, &text).unwrap();
        prop_assert!(model.labels.children(&pred.parent_label).contains(&pred.child_label));
        prop_assert!((pred.parent_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(tokenize(&clean_text(&text)).len() <= 40);
    }
}

#[test]
fn end_to_end_bounded_by_parent() {
    let ds = toy_corpus();
    let cfg = HdltexConfig { parent_kind: ModelKind::Nbc, child_kind: ModelKind::Nbc, ..Default::default() };
    let model = train_hierarchy(&cfg, &ds, None, &mut |_, _| {}, &NoClock).unwrap();
    let mut rows = Vec::new();
    for p in 0..2 {
        for c in 0..2 {
            rows.push((format!("P{p}"), format!("c{p}{c}"), format!("t{} s{}{} n0", 1 - p, p, 1 - c)));
            rows.push((format!("P{p}"), format!("c{p}{c}"), format!("s{p}{c}")));
        }
    }
    let test = Dataset::from_records("t", rows).unwrap();
    let m = evaluate_hierarchy(&model, &test).unwrap();
    assert!(m.end_to_end_accuracy <= m.parent_accuracy);
    assert!(m.end_to_end_accuracy <= m.weighted_child_accuracy + 1e-12);
    assert!((m.combined_accuracy - m.parent_accuracy * m.weighted_child_accuracy).abs() < 1e-15);
}
