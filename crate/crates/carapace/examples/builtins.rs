//! Arithmetic built-ins: comparisons filter rows, binding built-ins compute
//! one new variable from bound inputs. The demand-driven style keeps
//! bottom-up evaluation of arithmetic recursions finite.
//!
//! ```bash
//! cargo run --example builtins
//! ```

use carapace::engine::{evaluate_source, EvalOptions};

fn main() {
    let fib = r#"
        fib(0, 0).
        fib(1, 1).
        need(15).
        need(k) :- need(n), n >= 2, k = n - 1.
        need(k) :- need(n), n >= 2, k = n - 2.
        fib(n, r) :- need(n), n >= 2, a = n - 1, b = n - 2, fib(a, x), fib(b, y), r = x + y.
    "#;
    let out = evaluate_source(fib, &EvalOptions::interpreted()).unwrap();
    println!("fibonacci:");
    for line in out.relation_lines("fib").unwrap() {
        let cols: Vec<&str> = line.split('\t').collect();
        println!("  fib({:>2}) = {}", cols[0], cols[1]);
    }

    let squares = r#"
        bound(12).
        square(n, s) :- num(n), s = n * n, bound(b), s <= b.
        num(1). num(2). num(3). num(4). num(5).
    "#;
    let out = evaluate_source(squares, &EvalOptions::interpreted()).unwrap();
    println!("\nsquares bounded by 12:");
    for line in out.relation_lines("square").unwrap() {
        println!("  {}", line.replace('\t', "^2 = "));
    }
}
