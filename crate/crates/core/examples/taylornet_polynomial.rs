// A random TaylorNet evaluated three ways: factored forward pass, dense
// coefficient tensors, and its explicit monomial expansion.
//
// ```text
// cargo run --example taylornet_polynomial
// ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cat_core::interpret::render_polynomial;
use cat_core::oracle::{max_relative_error, random_matrix};
use cat_core::{param_count, RankConfig, TaylorNet};

pub fn run_example() -> cat_core::Result<()> {
    let (d, o, order) = (3, 2, 2);
    let ranks = RankConfig::uniform(order, 2);
    let net = TaylorNet::init_seeded(d, o, &ranks, 11)?;
    let count = param_count(d, o, order, &ranks);
    println!("d={d} o={o} N={order} rank 2: {} parameters", count.total);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = random_matrix(&mut rng, 5, d, 1.0);
    let factored = net.forward(&z)?;
    let expansion = net.expand_monomials()?;
    for r in 0..z.rows() {
        let dense = net.forward_full_tensor(z.row(r))?;
        let poly = expansion.evaluate(z.row(r));
        println!(
            "row {r}: factored {:?}  dense rel err {:.1e}  expansion rel err {:.1e}",
            factored.row(r),
            max_relative_error(factored.row(r), &dense),
            max_relative_error(&poly, &dense)
        );
    }
    println!("{} monomials including the constant", expansion.len());
    println!("{}", render_polynomial(&expansion, 3));
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
