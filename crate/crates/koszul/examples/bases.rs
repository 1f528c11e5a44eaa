//! Print the ordered row and column bases of the default flattening plan for
//! the order-n determinant/permanent layout, one element per line with its
//! 0-based flat position. `BASES.md` embeds this output for n = 4.
//!
//! Usage: cargo run --release --example bases [n]

use koszul::exterior::{product_unindex, Factor, ProductShape};
use koszul::flattening::FlatteningPlan;

/// `e3`, `(e1^e2)`, or `e2*` for the factor at one position of an element.
fn render(shape: &ProductShape, flat: u64, dual_last: bool) -> String {
    let elem = product_unindex(shape, flat).expect("flat position in range");
    let (mut wi, mut pi) = (0, 0);
    let mut parts = Vec::new();
    for (k, factor) in shape.factors.iter().enumerate() {
        let last = k + 1 == shape.factors.len();
        match factor {
            Factor::Wedge { .. } => {
                let w = &elem.wedges[wi];
                wi += 1;
                let body: Vec<String> = w.support().iter().map(|i| format!("e{i}")).collect();
                parts.push(format!("({})", body.join("^")));
            }
            Factor::Plain { .. } => {
                let i = elem.plains[pi];
                pi += 1;
                let star = if last && dual_last { "*" } else { "" };
                parts.push(format!("e{i}{star}"));
            }
        }
    }
    parts.join(" % ")
}

fn main() {
    let n: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("n must be a positive integer"))
        .unwrap_or(4);
    let dims = vec![n; n as usize];
    let plan = FlatteningPlan::default_for(&dims).expect("default plan exists for n >= 2");

    let cols = plan.column_shape(&dims);
    println!("column basis (domain), {} elements:", cols.size());
    for r in 0..cols.size() {
        println!("  {r:4}  {}", render(&cols, r, true));
    }

    let rows = plan.row_shape(&dims);
    println!("\nrow basis (codomain), {} elements:", rows.size());
    for r in 0..rows.size() {
        println!("  {r:4}  {}", render(&rows, r, false));
    }
}
