//! Parse a guarded-command model, print its canonical form and the folded
//! constants.
//!
//! cargo run --example parse_model [path]

use pra::gcl;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => pra::odrisk::BUNDLED_MODEL.to_string(),
    };
    let ast = gcl::parse(&source)?;
    print!("{}", gcl::render(&ast));

    let model = gcl::resolve(&ast)?;
    println!(
        "\n// {} variables, {} parameters",
        model.variables.len(),
        model.parameters.len()
    );
    for (name, value) in &model.constants {
        println!("// {name} = {value}");
    }

    // Errors carry a kind and a position.
    let err = gcl::parse("ctmc module M x:[0..1] init 2; endmodule").unwrap_err();
    println!("// {err}");
    Ok(())
}
