//! Scratch probe: throughput headroom of MMSE/MRC combiners over ZF.
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::config::SimConfig;
use sgf_core::env::{LowerWorld, RadioEnv};
use sgf_core::linalg::{cdot, invert, normalize};
use sgf_core::mac::DetectionMatrix;
use sgf_core::train::*;

fn mmse(snapshot: &sgf_core::channel::ChannelSnapshot, power: f64, noise: f64) -> DetectionMatrix {
    let k = snapshot.gbu_channels.len();
    let a = snapshot.gbu_channels[0].len();
    let mut columns = Vec::with_capacity(k);
    for target in 0..k {
        // R = sum_{j != target} P h_j h_j^H + n0 I
        let mut r = vec![vec![Complex64::new(0.0, 0.0); a]; a];
        for (j, h) in snapshot.gbu_channels.iter().enumerate() {
            if j == target { continue; }
            for x in 0..a {
                for y in 0..a {
                    r[x][y] += power * h[x] * h[y].conj();
                }
            }
        }
        for x in 0..a {
            r[x][x] += noise;
        }
        let rinv = invert(&r).unwrap();
        let h = &snapshot.gbu_channels[target];
        let mut v: Vec<Complex64> = (0..a)
            .map(|x| (0..a).map(|y| rinv[x][y] * h[y]).sum())
            .collect();
        normalize(&mut v);
        columns.push(v);
    }
    DetectionMatrix { columns }
}

fn mrc(snapshot: &sgf_core::channel::ChannelSnapshot) -> DetectionMatrix {
    DetectionMatrix {
        columns: snapshot.gbu_channels.iter().map(|h| {
            let mut v = h.clone();
            normalize(&mut v);
            v
        }).collect(),
    }
}

fn main() {
    let rate: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let mut cfg = SimConfig::default();
    cfg.target_rate = rate;
    let radio = cfg.radio();
    let _ = cdot;

    for combiner in ["zf", "mmse", "mrc"] {
        let (mut aoi, mut thpt, mut supply, mut gbu, mut gfu) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let episodes = 50u32;
        for seed in 1..=10u64 {
            let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
            for _ in 0..episodes {
                LowerWorld::reset(&mut env);
                for _ in 0..100 {
                    env.gar_tick();
                    let v = match combiner {
                        "zf" => env.zero_forcing().unwrap(),
                        "mmse" => mmse(env.snapshot(), radio.gbu_power, radio.noise),
                        _ => mrc(env.snapshot()),
                    };
                    let (budgets, plan) = env.plan_for(&v);
                    supply += plan.total_levels() as f64;
                    let w = env.waiting_count();
                    let tp = if w == 0 { 0.0 } else { 1.0 };
                    let rec = env.commit_slot(&v, &budgets, &plan, tp);
                    aoi += rec.mean_age;
                    thpt += rec.throughput;
                    gbu += rec.outcome.sum_gbu_rate();
                    gfu += rec.outcome.sum_gfu_rate();
                }
            }
        }
        let slots = (episodes as f64) * 100.0 * 10.0;
        println!("rate {rate} {combiner:>4}: aoi {:.3}  thpt/ep {:.1} (gbu {:.1} gfu {:.1})  mean supply {:.1}",
            aoi / slots, thpt / slots * 100.0, gbu / slots * 100.0, gfu / slots * 100.0, supply / slots);
    }
}
