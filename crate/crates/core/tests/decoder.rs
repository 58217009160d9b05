mod common;

use common::{noisy_llrs, reference_int8_layered};
use nrldpc::channel::quantize;
use nrldpc::decoder::{pack_lanes, Schedule};
use nrldpc::{
    code_params, load_basegraph, AnyDecoder, BaseGraphId, DecodeConfig, EarlyStop, Fixed8,
    Int8Decoder, PackedInt8Decoder, Precision, QuantConfig, Strategy,
};

fn int8(rho: usize) -> DecodeConfig {
    DecodeConfig {
        rho,
        ..DecodeConfig::default()
    }
}

#[test]
fn noise_free_decodes_in_one_iteration() {
    for id in [BaseGraphId::Bg1, BaseGraphId::Bg2] {
        for z in [2, 16] {
            let bg = load_basegraph(id, z).unwrap();
            let rows = id.rows();
            let params = code_params(&bg, rows).unwrap();
            let (msg, llrs) = noisy_llrs(&bg, rows, None, 7);
            for precision in [Precision::Int8, Precision::F16, Precision::F32] {
                let cfg = DecodeConfig {
                    precision,
                    ..DecodeConfig::default()
                };
                let mut d = AnyDecoder::new(&bg, rows, &cfg).unwrap();
                let r = d
                    .decode_channel(
                        &[&llrs],
                        &QuantConfig::for_precision(precision),
                        &params,
                        Schedule::Layered,
                    )
                    .unwrap();
                assert_eq!(r[0].bits, msg, "{id} Z={z} {precision:?}");
                assert_eq!(r[0].iterations, 1);
                assert!(r[0].success);
                assert_eq!(r[0].crc_ok, Some(params.k > 24));
            }
        }
    }
}

#[test]
fn scalar_matches_textbook_reference() {
    let bg = load_basegraph(BaseGraphId::Bg2, 16).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let cfg = DecodeConfig {
        early_stop: EarlyStop::Syndrome,
        ..int8(1)
    };
    let mut d = Int8Decoder::new(&bg, 42, &cfg).unwrap();
    let q8 = nrldpc::Beta::new(cfg.beta).unwrap().fixed();
    let mut failures = 0;
    for seed in 0..60 {
        let (_, llrs) = noisy_llrs(&bg, 42, Some(1.0), seed);
        let q = quantize::<Fixed8>(&llrs, &QuantConfig::int8(), &params).unwrap();
        let raw: Vec<i8> = q.iter().map(|v| v.get()).collect();
        let want = reference_int8_layered(&bg, 42, &raw, q8, cfg.max_iter);
        let got = &d.decode(&q).unwrap()[0];
        assert_eq!(got.bits, want.bits, "seed {seed}");
        assert_eq!(got.iterations, want.iterations, "seed {seed}");
        assert_eq!(got.syndrome_weight == 0, want.syndrome_ok);
        failures += usize::from(!want.syndrome_ok);
    }
    // The point must exercise both converged and failed decodes.
    assert!(failures > 0 && failures < 60, "failures {failures}");
}

#[test]
fn packed_lanes_match_scalar_decodes() {
    let bg = load_basegraph(BaseGraphId::Bg2, 8).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let cfg1 = int8(1);
    let mut scalar = Int8Decoder::new(&bg, 42, &cfg1).unwrap();
    let mut packed = PackedInt8Decoder::new(&bg, 42, &int8(4)).unwrap();
    for batch in 0..10u64 {
        let lanes: Vec<Vec<Fixed8>> = (0..4)
            .map(|l| {
                let (_, llrs) = noisy_llrs(&bg, 42, Some(0.5), batch * 4 + l);
                quantize(&llrs, &QuantConfig::int8(), &params).unwrap()
            })
            .collect();
        let got = packed.decode(&pack_lanes(&lanes)).unwrap();
        for (l, lane) in lanes.iter().enumerate() {
            assert_eq!(
                got[l],
                scalar.decode(lane).unwrap()[0],
                "batch {batch} lane {l}"
            );
        }
    }
}

#[test]
fn strategies_and_parallel_rows_agree() {
    let bg = load_basegraph(BaseGraphId::Bg2, 16).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let base = DecodeConfig {
        trace: true,
        ..int8(1)
    };
    let mut reference = Int8Decoder::new(&bg, 42, &base).unwrap();
    let variants: Vec<DecodeConfig> = [2, 4, 8, 16]
        .into_iter()
        .map(|alpha| DecodeConfig {
            strategy: Strategy::LowLatency { alpha },
            ..base
        })
        .chain([DecodeConfig {
            parallel_rows: true,
            ..base
        }])
        .collect();
    for seed in 0..20 {
        let (_, llrs) = noisy_llrs(&bg, 42, Some(1.0), seed);
        let q = quantize::<Fixed8>(&llrs, &QuantConfig::int8(), &params).unwrap();
        let want = reference.decode(&q).unwrap();
        for cfg in &variants {
            let got = Int8Decoder::new(&bg, 42, cfg).unwrap().decode(&q).unwrap();
            assert_eq!(got, want, "{:?} seed {seed}", cfg.strategy);
        }
    }
}

#[test]
fn flooding_converges_noise_free_and_matches_across_lanes() {
    let bg = load_basegraph(BaseGraphId::Bg2, 8).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let (msg, llrs) = noisy_llrs(&bg, 42, None, 3);
    let mut d = AnyDecoder::new(&bg, 42, &int8(4)).unwrap();
    let r = d
        .decode_channel(
            &[&llrs, &llrs],
            &QuantConfig::int8(),
            &params,
            Schedule::Flooding,
        )
        .unwrap();
    assert_eq!(r.len(), 2);
    assert_eq!(r[0].bits, msg);
    assert_eq!(r[0], r[1]);
}

#[test]
fn layered_needs_fewer_iterations_than_flooding() {
    let bg = load_basegraph(BaseGraphId::Bg2, 16).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let mut d = AnyDecoder::new(
        &bg,
        42,
        &DecodeConfig {
            max_iter: 50,
            ..int8(1)
        },
    )
    .unwrap();
    let (mut layered, mut flooding) = (0, 0);
    for seed in 0..40 {
        let (_, llrs) = noisy_llrs(&bg, 42, Some(2.0), seed);
        let q = QuantConfig::int8();
        layered += d
            .decode_channel(&[&llrs], &q, &params, Schedule::Layered)
            .unwrap()[0]
            .iterations;
        flooding += d
            .decode_channel(&[&llrs], &q, &params, Schedule::Flooding)
            .unwrap()[0]
            .iterations;
    }
    assert!(layered < flooding, "layered {layered} flooding {flooding}");
}

#[test]
fn trace_records_every_iteration() {
    let bg = load_basegraph(BaseGraphId::Bg2, 16).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let cfg = DecodeConfig {
        trace: true,
        early_stop: EarlyStop::None,
        max_iter: 5,
        ..int8(1)
    };
    let (_, llrs) = noisy_llrs(&bg, 42, Some(1.0), 11);
    let r = AnyDecoder::new(&bg, 42, &cfg)
        .unwrap()
        .decode_channel(&[&llrs], &QuantConfig::int8(), &params, Schedule::Layered)
        .unwrap();
    assert_eq!(r[0].iterations, 5);
    let its: Vec<usize> = r[0].trace.iter().map(|t| t.iteration).collect();
    assert_eq!(its, vec![1, 2, 3, 4, 5]);
    assert_eq!(r[0].trace[4].syndrome_weight, r[0].syndrome_weight);
}

#[test]
fn process_layer_conserves_messages() {
    // After a layer, posterior minus the new messages equals the
    // variable-to-check values, which in turn were posterior minus the old
    // messages: the channel contribution is preserved on unsaturated values.
    let bg = load_basegraph(BaseGraphId::Bg2, 4).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let cfg = DecodeConfig {
        precision: Precision::F32,
        ..DecodeConfig::default()
    };
    let mut d = nrldpc::F32Decoder::new(&bg, 42, &cfg).unwrap();
    let (_, llrs) = noisy_llrs(&bg, 42, Some(1.0), 5);
    let q = quantize::<f32>(&llrs, &QuantConfig::float(Precision::F32), &params).unwrap();
    d.init(&q).unwrap();
    for r in 0..42 {
        d.process_layer(r);
    }
    let ws = d.workspace();
    let z = 4;
    let mut sums = ws.channel.clone();
    let mut offset = 0;
    for r in 0..42 {
        for i in 0..z {
            for e in bg.row(r) {
                let v = e.col * z + (i + e.shift) % z;
                sums[v] += ws.messages[offset];
                offset += 1;
            }
        }
    }
    for (v, (s, p)) in sums.iter().zip(&ws.posterior).enumerate() {
        assert!((s - p).abs() < 1e-3 * (1.0 + p.abs()), "v={v}: {s} vs {p}");
    }
}

#[test]
fn mismatched_storage_is_rejected() {
    let bg = load_basegraph(BaseGraphId::Bg2, 8).unwrap();
    assert!(PackedInt8Decoder::new(&bg, 42, &int8(1)).is_err());
    assert!(Int8Decoder::new(&bg, 42, &int8(4)).is_err());
    assert!(AnyDecoder::new(&bg, 42, &int8(3)).is_err());
    let mut d = Int8Decoder::new(&bg, 42, &int8(1)).unwrap();
    assert!(d.decode(&[Fixed8::default(); 3]).is_err());
}

#[test]
fn packed_f16_matches_scalar_f16() {
    use nrldpc::{f16, F16Decoder, PackedF16Decoder};
    let bg = load_basegraph(BaseGraphId::Bg2, 8).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let cfg = DecodeConfig {
        precision: Precision::F16,
        ..DecodeConfig::default()
    };
    let quant = QuantConfig::float(Precision::F16);
    let mut scalar = F16Decoder::new(&bg, 42, &cfg).unwrap();
    let mut packed = PackedF16Decoder::new(&bg, 42, &DecodeConfig { rho: 2, ..cfg }).unwrap();
    for pair in 0..20u64 {
        let lanes: Vec<Vec<f16>> = (0..2)
            .map(|l| {
                quantize(
                    &noisy_llrs(&bg, 42, Some(0.5), pair * 2 + l).1,
                    &quant,
                    &params,
                )
                .unwrap()
            })
            .collect();
        let got = packed.decode(&pack_lanes(&lanes)).unwrap();
        for (l, lane) in lanes.iter().enumerate() {
            assert_eq!(
                got[l],
                scalar.decode(lane).unwrap()[0],
                "pair {pair} lane {l}"
            );
        }
    }
}

#[test]
fn f16_and_f32_agree_when_margins_are_clear() {
    let bg = load_basegraph(BaseGraphId::Bg2, 16).unwrap();
    let params = code_params(&bg, 42).unwrap();
    let run = |precision, llrs: &[f64]| {
        let cfg = DecodeConfig {
            precision,
            trace: true,
            ..DecodeConfig::default()
        };
        AnyDecoder::new(&bg, 42, &cfg)
            .unwrap()
            .decode_channel(
                &[llrs],
                &QuantConfig::float(precision),
                &params,
                Schedule::Layered,
            )
            .unwrap()
            .remove(0)
    };
    let mut compared = 0;
    for seed in 0..200 {
        let ebn0 = 2.0 + (seed % 4) as f64;
        let (_, llrs) = noisy_llrs(&bg, 42, Some(ebn0), seed);
        let a = run(Precision::F32, &llrs);
        let b = run(Precision::F16, &llrs);
        let clear = |r: &nrldpc::DecodeResult| r.trace.iter().all(|t| t.min_abs_llr > 0.01);
        if clear(&a) && clear(&b) {
            assert_eq!(a.bits, b.bits, "seed {seed}");
            compared += 1;
        }
    }
    assert!(compared >= 30, "only {compared} traces had clear margins");
}
