//! Problem fixtures shared by the benchmarks.

use bsi_core::synth::{
    derive_seeds, generate_operator, generate_sparse_signal, synthesize_observation, NoiseModel, OperatorKind,
    OperatorSpec, SignalSpec,
};
use bsi_core::{DMatrix, ForwardProblem};

/// Square convolution problem with `size / 16` spikes and nonstationary
/// noise; indirect problems use `D = I`.
pub fn convolution_problem(size: usize, indirect: bool, seed: u64) -> ForwardProblem {
    let [s_signal, s_operator, s_noise] = derive_seeds::<3>(seed);
    let f = generate_sparse_signal(&SignalSpec {
        length: size,
        sparsity: (size / 16).max(1),
        amplitude_range: (1.0, 2.0),
        seed: s_signal,
    })
    .expect("valid signal spec");
    let h = generate_operator(&OperatorSpec {
        kind: OperatorKind::Convolution {
            kernel: vec![0.25, 0.5, 0.25],
        },
        rows: size,
        cols: size,
        seed: s_operator,
    })
    .expect("valid operator spec");
    let (g, _) = synthesize_observation(&h, &f, &NoiseModel::Nonstationary { alpha: 3.0, beta: 0.02 }, s_noise)
        .expect("noise synthesis");
    if indirect {
        ForwardProblem::indirect(g, h, DMatrix::identity(size, size)).expect("consistent shapes")
    } else {
        ForwardProblem::direct(g, h).expect("consistent shapes")
    }
}
