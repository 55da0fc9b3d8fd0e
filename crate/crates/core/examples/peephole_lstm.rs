// Peephole LSTM cell: gate ranges, a saturated forget gate holding memory,
// and the short-term feature sequence.
//
// cargo run --example peephole_lstm

use cltfp::nn::LstmCell;
use cltfp::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> cltfp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cell = LstmCell::new(&mut rng, 4, 3);
    let x = Tensor::vector(vec![0.5, -1.0, 2.0, 0.1]);
    let h0 = Tensor::zeros(&[3]);
    let c0 = Tensor::vector(vec![1.0, -2.0, 0.5]);

    let step = cell.step_cached(x.data(), h0.data(), c0.data())?;
    let (i, f, o) = step.gates();
    println!("input gate {i:?}\nforget gate {f:?}\noutput gate {o:?}");
    println!("H1 {:?}", step.hidden());

    cell.b_f = Tensor::filled(&[3], 10.0);
    cell.b_i = Tensor::filled(&[3], -10.0);
    let (_, c) = cell.step(&x, &h0, &c0)?;
    println!("with b_f = 10, b_i = -10: C0 {:?} -> C1 {:?}", c0.data(), c.data());

    let inputs: Vec<Tensor> = (0..15).map(|k| Tensor::vector(vec![k as f64 / 15.0; 4])).collect();
    let hidden = cell.sequence_forward(&inputs, None, None)?;
    println!("{} hidden states of size {}", hidden.len(), hidden[0].len());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
