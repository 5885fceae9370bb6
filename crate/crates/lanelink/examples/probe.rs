use lanelink::phy::{apply_channel, ChannelModel, ChannelProfile, ChannelRealizer, DopplerModel, NrNumerology, SlotGrid};
use lanelink::{detect_slot, DetectionConfig, ExecPath, PrecisionMode};

fn main() {
    let num = NrNumerology::new(15, 60).unwrap();
    for (nr, nt) in [(2usize, 2usize), (4, 4), (8, 8)] {
        let profile = ChannelProfile::synthetic3(DopplerModel::BlockFading, 1);
        let realizer = ChannelRealizer::new(ChannelModel::Profile(profile), &num, nr, nt);
        let h = realizer.realize(0);
        let tx = SlotGrid::random_data(&num, nt, 4, 7, PrecisionMode::Pd).unwrap();
        let rx = apply_channel(&tx, &h).unwrap();
        for precision in [PrecisionMode::Ps, PrecisionMode::Pd] {
            for path in [ExecPath::Scalar, ExecPath::Vector] {
                let rxp = rx.convert_precision(precision);
                let hp = h.convert_precision(precision);
                let cfg = DetectionConfig { nr, nt, precision, path, noise_var: 0.1 };
                // warmup
                for _ in 0..50 {
                    detect_slot(&rxp, &hp, &cfg).unwrap();
                }
                let reps = 200;
                let mut cov = 0u64; let mut lu = 0u64; let mut fwd = 0u64;
                let mut bwd = 0u64; let mut eq = 0u64; let mut tot = 0u64;
                for _ in 0..reps {
                    let out = detect_slot(&rxp, &hp, &cfg).unwrap();
                    let t = out.timings;
                    cov += t.covariance_ns; lu += t.lu_ns; fwd += t.forward_sub_ns;
                    bwd += t.backward_sub_ns; eq += t.equalize_ns; tot += t.total_ns;
                }
                let r = reps as f64 * 1000.0;
                println!(
                    "{nr}x{nt} {precision:?} {path:?}: cov {:.1} lu {:.1} fwd {:.1} bwd {:.1} eq {:.1} | total {:.1} us (trio {:.1})",
                    cov as f64 / r, lu as f64 / r, fwd as f64 / r, bwd as f64 / r,
                    eq as f64 / r, tot as f64 / r, (lu + fwd + bwd) as f64 / r
                );
            }
        }
    }
}
