//! The `.osys` model language: parse a file, inspect the built model, print
//! it back, and drive the command-line front end in-process.
//!
//! ```text
//! cargo run --example dsl
//! ```

use openmech::dsl::model::{Model, ModelOptions, System};
use openmech::dsl::{parse, print};

const SOURCE: &str = "
param m = 1
param k = 4
phase_space Pt { }
phase_space Wall { pair u w }
phase_space Cart { pair q p  pair u w }
ham_system cart { span Pt Cart Wall ; H = p^2/(2*m) + 1/2*k*(q - u)^2 }
ham_system wall { span Wall Wall Pt ; H = w^2/2 }
compose closed = cart * wall
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = parse(SOURCE)?;
    println!("{}", print(&file));

    let model = Model::build(&file, &ModelOptions::default())?;
    for entry in &model.systems {
        if let System::Ham(h) = &entry.system {
            println!("{}: {} with H = {}", entry.name, h.apex(), h.hamiltonian());
        }
    }

    let path = std::env::temp_dir().join("openmech-dsl-example.osys");
    std::fs::write(&path, SOURCE)?;
    for cmd in ["check", "compose"] {
        let mut out = Vec::new();
        let code = openmech::cli::run(["open-mech", cmd, &path.to_string_lossy()], &mut out, &mut std::io::stderr());
        println!("$ open-mech {cmd} (exit {code})\n{}", String::from_utf8(out)?);
    }

    match parse("phase_space P { pair q }") {
        Err(e) => println!("error: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
