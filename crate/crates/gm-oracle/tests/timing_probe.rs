use gm_core::engines::SchlumprechtEngine;
use gm_core::rat::rat;
use gm_core::vec::FinVec;
use gm_oracle::oracle_norm;
use std::time::Instant;

fn lcg(state: &mut u64) -> u64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    *state >> 33
}

#[test]
fn probe_timing() {
    let mut st = 12345u64;
    let coeffs = [rat(1, 1), rat(-1, 1), rat(1, 2), rat(-1, 2), rat(2, 1), rat(-2, 1)];
    let mut vecs = Vec::new();
    for _ in 0..50 {
        let n = 4 + (lcg(&mut st) % 5) as u32; // 4..8
        let mut v = FinVec::zero();
        let mut idx = 1u32;
        for _ in 0..n {
            idx += 1 + (lcg(&mut st) % 3) as u32;
            v.set(idx, coeffs[(lcg(&mut st) % 6) as usize].clone());
        }
        vecs.push(v);
    }
    let eng = SchlumprechtEngine::new();
    let t = Instant::now();
    for v in &vecs {
        let _ = eng.eval(v);
    }
    let dp_time = t.elapsed();
    let t = Instant::now();
    for v in &vecs {
        let _ = oracle_norm(v);
    }
    let or_time = t.elapsed();
    let t = Instant::now();
    for v in &vecs {
        assert_eq!(eng.eval(v).lower, oracle_norm(v), "{}", v.serialize());
    }
    let both = t.elapsed();
    eprintln!("50 vectors: dp {dp_time:?}, oracle {or_time:?}, dp+oracle+eq {both:?}");
    // criterion-3 shape: one vector, all sign patterns
    let v = &vecs[7];
    let pats = 1u32 << v.support_size();
    let t = Instant::now();
    for bits in 0..pats {
        let f = FinVec::from_entries(v.iter().enumerate().map(|(k, (i, c))| {
            let s = if (bits >> k) & 1 == 1 { -c.clone() } else { c.clone() };
            (*i, s)
        }));
        let _ = eng.eval(&f);
    }
    eprintln!("{} patterns on support {}: {:?}", pats, v.support_size(), t.elapsed());
}
