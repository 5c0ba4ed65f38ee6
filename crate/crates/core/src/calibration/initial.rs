use crate::tables::{BalancingTerms, SupplyUseTables};

/// Initial available amounts `x(0)` and the first-step correction `x̃`.
///
/// `x(0)` is everything the cell's output is used for: all process uses and
/// all positive demand, domestic or foreign. `x̃` collects negative stock
/// additions received by the country and the negative balancing term.
pub fn derive_initial_state(
    tables: &SupplyUseTables,
    balancing: &BalancingTerms,
) -> (Vec<f64>, Vec<f64>) {
    let reg = tables.registry();
    let n = reg.n_cells();
    let mut amounts = vec![0.0; n];
    for (k, &v) in tables.uses() {
        amounts[reg.cell(k.origin, k.product)] += v;
    }
    for (k, v) in tables.demand_positive() {
        amounts[reg.cell(k.origin, k.product)] += v;
    }
    let mut stock_release = vec![0.0; n];
    if let Some(stock) = reg.stock_addition_purpose() {
        for (k, v) in tables.demand_negative() {
            if k.purpose == stock {
                stock_release[reg.cell(k.destination, k.product)] -= v;
            }
        }
    }
    let correction = (0..n)
        .map(|c| stock_release[c] - balancing.negative(c))
        .collect();
    (amounts, correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::compute_balancing;
    use crate::tables::toy::ToyWorld;

    #[test]
    fn initial_amount_sums_uses_and_positive_demand() {
        let mut w = ToyWorld::new(2, 1, 1);
        w.uses(0, 0, 0, 0, 50.0);
        w.uses(0, 0, 1, 0, 30.0);
        w.demand(0, 0, 0, "food", 25.0);
        w.demand(0, 0, 1, "other", 5.0);
        let t = w.build();
        let (x0, _) = derive_initial_state(&t, &compute_balancing(&t));
        assert_eq!(x0[0], 110.0);
        assert_eq!(x0[1], 0.0);
    }

    #[test]
    fn correction_adds_stock_release_and_deficit() {
        // Y- stock addition -5 into C0, and B = 20 - 0 - 30 = -10
        let mut w = ToyWorld::new(1, 1, 1);
        w.supply(0, 0, 0, 20.0);
        w.demand(0, 0, 0, "food", 30.0);
        w.demand(0, 0, 0, "stock_addition", -5.0);
        let t = w.build();
        let b = compute_balancing(&t);
        assert_eq!(b.negative(0), -10.0);
        let (_, xt) = derive_initial_state(&t, &b);
        assert_eq!(xt[0], 15.0);
    }

    #[test]
    fn empty_tables() {
        let t = ToyWorld::new(2, 2, 1).build();
        let (x0, xt) = derive_initial_state(&t, &compute_balancing(&t));
        assert!(x0.iter().chain(&xt).all(|&v| v == 0.0));
    }
}
