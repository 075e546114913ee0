use std::collections::HashMap;

use super::MilpError;

/// Handle to a declared variable; indexes the model's variable list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef(pub(crate) usize);

impl VarRef {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstrRef(pub(crate) usize);

impl ConstrRef {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Real,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Real)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A linear expression under construction. Terms may repeat; they are merged
/// when the expression is attached to a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarRef, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, var: VarRef, coef: f64) -> Self {
        self.terms.push((var, coef));
        self
    }

    pub fn add(&mut self, var: VarRef, coef: f64) {
        self.terms.push((var, coef));
    }

    pub fn terms(&self) -> &[(VarRef, f64)] {
        &self.terms
    }
}

impl FromIterator<(VarRef, f64)> for LinExpr {
    fn from_iter<I: IntoIterator<Item = (VarRef, f64)>>(iter: I) -> Self {
        Self {
            terms: iter.into_iter().collect(),
        }
    }
}

/// A stored row: merged terms in first-occurrence order.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarRef, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `activity` violates the row (0 when satisfied).
    pub fn violation(&self, activity: f64) -> f64 {
        match self.relation {
            Relation::Le => (activity - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - activity).max(0.0),
            Relation::Eq => (activity - self.rhs).abs(),
        }
    }
}

/// Minimization MILP: bounded variables, linear rows, linear objective.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarRef, f64)>,
    var_names: HashMap<String, VarRef>,
    constr_names: HashMap<String, ConstrRef>,
}

/// Sums coefficients of repeated variables, keeping first-occurrence order and
/// dropping terms that cancel to zero.
fn merge_terms(terms: &[(VarRef, f64)]) -> Vec<(VarRef, f64)> {
    let mut slot: HashMap<VarRef, usize> = HashMap::with_capacity(terms.len());
    let mut merged: Vec<(VarRef, f64)> = Vec::with_capacity(terms.len());
    for &(var, coef) in terms {
        match slot.get(&var) {
            Some(&i) => merged[i].1 += coef,
            None => {
                slot.insert(var, merged.len());
                merged.push((var, coef));
            }
        }
    }
    merged.retain(|&(_, c)| c != 0.0);
    merged
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarRef, MilpError> {
        let name = name.into();
        if self.var_names.contains_key(&name) {
            return Err(MilpError::DuplicateVariable(name));
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (0.0, 1.0),
            _ => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvertedBounds { name, lower, upper });
        }
        let var = VarRef(self.variables.len());
        self.var_names.insert(name.clone(), var);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(var)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConstrRef, MilpError> {
        let name = name.into();
        if self.constr_names.contains_key(&name) {
            return Err(MilpError::DuplicateConstraint(name));
        }
        self.check_refs(&expr)?;
        let constr = ConstrRef(self.constraints.len());
        self.constr_names.insert(name.clone(), constr);
        self.constraints.push(Constraint {
            name,
            terms: merge_terms(expr.terms()),
            relation,
            rhs,
        });
        Ok(constr)
    }

    /// Sets the objective. Only minimization is supported.
    pub fn set_objective(&mut self, sense: Sense, expr: LinExpr) -> Result<(), MilpError> {
        if sense == Sense::Maximize {
            return Err(MilpError::UnsupportedSense);
        }
        self.check_refs(&expr)?;
        self.objective = merge_terms(expr.terms());
        Ok(())
    }

    fn check_refs(&self, expr: &LinExpr) -> Result<(), MilpError> {
        match expr.terms().iter().find(|(v, _)| v.0 >= self.variables.len()) {
            Some(&(v, _)) => Err(MilpError::UnknownVariable(format!("#{}", v.0))),
            None => Ok(()),
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarRef) -> &Variable {
        &self.variables[var.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, c: ConstrRef) -> &Constraint {
        &self.constraints[c.0]
    }

    pub fn objective(&self) -> &[(VarRef, f64)] {
        &self.objective
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarRef> {
        self.var_names.get(name).copied()
    }

    pub fn constraint_by_name(&self, name: &str) -> Option<&Constraint> {
        self.constr_names.get(name).map(|c| &self.constraints[c.0])
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// True when every objective term is an integral variable with an integer
    /// coefficient, so every feasible objective value is an integer.
    pub fn has_integral_objective(&self) -> bool {
        self.objective
            .iter()
            .all(|&(v, c)| self.variables[v.0].kind.is_integral() && c.fract() == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_registration() {
        let mut m = MilpModel::new();
        let mk = m.add_variable("m", VarKind::Integer, 0.0, f64::INFINITY).unwrap();
        assert_eq!(m.num_vars(), 1);
        assert_eq!(m.var_by_name("m"), Some(mk));
        assert!(matches!(
            m.add_variable("m", VarKind::Real, 0.0, 1.0),
            Err(MilpError::DuplicateVariable(_))
        ));
        assert!(matches!(
            m.add_variable("x", VarKind::Real, 2.0, 1.0),
            Err(MilpError::InvertedBounds { .. })
        ));
    }

    #[test]
    fn binary_bounds_forced() {
        let mut m = MilpModel::new();
        let u = m
            .add_variable("u_0_0_0", VarKind::Binary, f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        let v = m.variable(u);
        assert_eq!((v.lower, v.upper), (0.0, 1.0));
    }

    #[test]
    fn constraint_merging_and_refs() {
        let mut m = MilpModel::new();
        let x = m.add_variable("x", VarKind::Real, 0.0, f64::INFINITY).unwrap();
        let c = m
            .add_constraint("c0", LinExpr::new().term(x, 1.0), Relation::Le, 5.0)
            .unwrap();
        assert_eq!(m.constraint(c).terms, vec![(x, 1.0)]);

        let c = m
            .add_constraint("c1", LinExpr::new().term(x, 1.0).term(x, 1.0), Relation::Le, 5.0)
            .unwrap();
        assert_eq!(m.constraint(c).terms, vec![(x, 2.0)]);

        let ghost = VarRef(7);
        assert!(matches!(
            m.add_constraint("c2", LinExpr::new().term(ghost, 1.0), Relation::Le, 5.0),
            Err(MilpError::UnknownVariable(_))
        ));
        assert!(matches!(
            m.add_constraint("c0", LinExpr::new(), Relation::Le, 5.0),
            Err(MilpError::DuplicateConstraint(_))
        ));
    }

    #[test]
    fn maximize_rejected() {
        let mut m = MilpModel::new();
        let x = m.add_variable("x", VarKind::Real, 0.0, 1.0).unwrap();
        assert!(matches!(
            m.set_objective(Sense::Maximize, LinExpr::new().term(x, 1.0)),
            Err(MilpError::UnsupportedSense)
        ));
        m.set_objective(Sense::Minimize, LinExpr::new().term(x, 1.0)).unwrap();
        assert!(!m.has_integral_objective());
    }
}
