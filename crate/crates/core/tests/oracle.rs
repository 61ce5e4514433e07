//! Dense spin-basis evolution of small chains against the free-fermion
//! pipeline. The tabulated values were produced once by `ed::evolve` from
//! the `g0 = 10` ground state at default tolerances and are frozen here.

use kinkcorr::bdg::{evolve_grid, Frame};
use kinkcorr::correlators::{fermion_correlators, kink_kink_exact};
use kinkcorr::ed::{evolve, ground_state, measure_kinks};
use kinkcorr::spinspin::czz_exact;
use kinkcorr::{ChainSpec, IntegratorConfig, RampProtocol};

struct Frozen {
    n: usize,
    tau: f64,
    halt: bool,
    density: f64,
    kink_kink: &'static [f64],
    zz: &'static [f64],
}

#[rustfmt::skip]
const FROZEN: &[Frozen] = &[
    Frozen { n: 4, tau: 0.5, halt: false, density: 0.15011021598628613, kink_kink: &[0.02903274137913733, 0.03257039517586998], zz: &[0.6997795680274305, 0.6058224093452053] },
    Frozen { n: 4, tau: 0.5, halt: true, density: 0.06364203145656293, kink_kink: &[0.009611131296821958, 0.03796450253260693], zz: &[0.8727159370868806, 0.8000776320327151] },
    Frozen { n: 4, tau: 1.0, halt: false, density: 0.04045120762749698, kink_kink: &[0.010566239334074643, 0.015247772798237245], zz: &[0.9190975847450265, 0.8870053276204226] },
    Frozen { n: 4, tau: 1.0, halt: true, density: 0.06592356496829063, kink_kink: &[0.016940157860466494, 0.02264883319234802], zz: &[0.8681528700634402, 0.821450037241239] },
    Frozen { n: 4, tau: 2.0, halt: false, density: 0.0009509779375349871, kink_kink: &[0.0001787597211920179, 0.0005912818671221105], zz: &[0.9980980441249763, 0.9969147445708249] },
    Frozen { n: 4, tau: 2.0, halt: true, density: 0.03894158367404245, kink_kink: &[0.01030111446242863, 0.013947629538276501], zz: &[0.9221168326519575, 0.8915039109097571] },
    Frozen { n: 6, tau: 0.5, halt: false, density: 0.19754404706000073, kink_kink: &[0.007080651752168085, 0.012090228064639622, 0.013732766727334885], zz: &[0.6049119058800225, 0.39424102088406965, 0.3258581897691532] },
    Frozen { n: 6, tau: 0.5, halt: true, density: 0.11442121582064359, kink_kink: &[0.0010820903747347187, 0.021078594608440342, 0.017882466384812775], zz: &[0.7711575683587362, 0.5990123567358852, 0.5424906528680872] },
    Frozen { n: 6, tau: 1.0, halt: false, density: 0.08775915252202648, kink_kink: &[0.005367555880787147, 0.01425338438824944, 0.01722403493463603], zz: &[0.8244816949559644, 0.7012402888405985, 0.656414548980483] },
    Frozen { n: 6, tau: 1.0, halt: true, density: 0.048011420252910976, kink_kink: &[-0.0011203895873324553, 0.013114147976191889, 0.015457819718699634], zz: &[0.9039771594941927, 0.8126931465378462, 0.7786841495059812] },
    Frozen { n: 6, tau: 2.0, halt: false, density: 0.01247985961342235, kink_kink: &[-2.393478922577e-6, 0.003387069177237237, 0.00515912301184464], zz: &[0.9750402807731869, 0.9506939752145347, 0.9402146945291746] },
    Frozen { n: 6, tau: 2.0, halt: true, density: 0.026133538275633538, kink_kink: &[0.0039452318502357815, 0.004986472817126325, 0.005823735912423629], zz: &[0.9477329234487653, 0.9139786215896586, 0.9018665224678597] },
    Frozen { n: 8, tau: 0.5, halt: false, density: 0.21034538460768426, kink_kink: &[-0.0008256334208932986, 0.0024835818882436023, 0.0038408517920349577, 0.004276374280511648], zz: &[0.5793092307846505, 0.3322966511887257, 0.19907482421429962, 0.157404924493191] },
    Frozen { n: 8, tau: 0.5, halt: true, density: 0.21533861798759546, kink_kink: &[-0.005327000210639421, 0.007416280691497204, 0.01774861187969691, 0.019705284915776076], zz: &[0.5693227640248225, 0.3028204087943055, 0.16639511089171727, 0.13968961100940738] },
    Frozen { n: 8, tau: 1.0, halt: false, density: 0.11757547085801484, kink_kink: &[-0.0012663390562045514, 0.005981648736221978, 0.009728196415519221, 0.010934296209320205], zz: &[0.76484905828399, 0.5799287257330785, 0.46058730980112944, 0.41960102729591126] },
    Frozen { n: 8, tau: 1.0, halt: true, density: 0.12471442408652939, kink_kink: &[0.0015352584054876845, 0.00819557755643831, 0.017474582868156525, 0.017379546686059164], zz: &[0.750571151826965, 0.5694980875767975, 0.44857609973176626, 0.4107201481705431] },
    Frozen { n: 8, tau: 2.0, halt: false, density: 0.03762910217377259, kink_kink: &[-0.001024062616106197, 0.0035766187792995404, 0.007435901747938636, 0.008805473109148577], zz: &[0.9247417956524422, 0.8510511381620911, 0.796345258369859, 0.7762843986834295] },
    Frozen { n: 8, tau: 2.0, halt: true, density: 0.04268621609732791, kink_kink: &[-0.0009115867223069605, 0.002778963434386809, 0.009798425149535469, 0.010381203949525518], zz: &[0.9146275678053303, 0.8328972409002794, 0.7671282961476688, 0.7442874255992563] },
];

fn protocol(f: &Frozen) -> RampProtocol {
    if f.halt {
        RampProtocol::halted(10.0, f.tau, 0.5, 3.0).unwrap()
    } else {
        RampProtocol::linear(10.0, f.tau).unwrap()
    }
}

#[test]
fn pipeline_matches_frozen_oracle() {
    let cfg = IntegratorConfig::default();
    for f in FROZEN {
        let modes = evolve_grid(&protocol(f), ChainSpec::new(f.n).unwrap(), &cfg).unwrap();
        let fc = fermion_correlators(&modes, f.n / 2 + 1).unwrap();
        let tag = format!("N={} tau={} halt={}", f.n, f.tau, f.halt);
        assert!((fc.density - f.density).abs() < 1e-6, "{tag}: n {} vs {}", fc.density, f.density);
        for r in 1..=f.n / 2 {
            let kk = kink_kink_exact(&fc, r).unwrap();
            assert!((kk - f.kink_kink[r - 1]).abs() < 1e-6, "{tag} R={r}: C^KK {kk} vs {}", f.kink_kink[r - 1]);
            let zz = czz_exact(&fc, r).unwrap();
            assert!((zz - f.zz[r - 1]).abs() < 1e-6, "{tag} R={r}: zz {zz} vs {}", f.zz[r - 1]);
        }
    }
}

#[test]
fn dense_evolution_reproduces_frozen_values() {
    let cfg = IntegratorConfig::default();
    for f in FROZEN.iter().filter(|f| f.n <= 6) {
        let m = measure_kinks(&evolve(&ground_state(f.n, 10.0).unwrap(), &protocol(f), &cfg).unwrap());
        assert!((m.density - f.density).abs() < 1e-8);
        for (a, b) in m.kink_kink.iter().zip(f.kink_kink).chain(m.zz.iter().zip(f.zz)) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn lab_frame_agrees_with_adiabatic_frame() {
    let cfg = IntegratorConfig::new(1e-12, 1e-12, 1.0).unwrap();
    let f = &FROZEN[FROZEN.len() - 1];
    let chain = ChainSpec::new(f.n).unwrap();
    let lab = kinkcorr::bdg::evolve_grid_in(&protocol(f), chain, &cfg, Frame::Lab).unwrap();
    let fc = fermion_correlators(&lab, f.n / 2 + 1).unwrap();
    assert!((fc.density - f.density).abs() < 1e-6);
    for r in 1..=f.n / 2 {
        assert!((kink_kink_exact(&fc, r).unwrap() - f.kink_kink[r - 1]).abs() < 1e-6);
    }
}
