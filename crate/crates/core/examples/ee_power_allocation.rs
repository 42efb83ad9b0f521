//! Energy-efficient power allocation with Dinkelbach's method, checked
//! against the equal split and an exhaustive grid.

use urcsc::optimizer::{brute_force_ee, solve_ee_traced, EeProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut problem = EeProblem::new(&[1.0, 1.5, 0.8], &[1.2, 0.3, 0.9], 1.0, 0.5);
    problem.circuit_power_w = 0.2;

    let run = solve_ee_traced(&problem, 1e-9, 100)?;
    println!("lambda sequence: {:?}", run.lambdas);
    println!("powers:          {:?}", run.allocation.powers);
    println!("EE:              {:.6} bit/J", run.allocation.energy_efficiency);
    println!("equal split EE:  {:.6} bit/J", problem.equal_split().energy_efficiency);

    let grid = brute_force_ee(&problem, 1e-3)?;
    println!("grid EE:         {:.6} bit/J at {:?}", grid.energy_efficiency, grid.powers);
    Ok(())
}
