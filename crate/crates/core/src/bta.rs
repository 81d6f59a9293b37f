//! Regular threads over a set of basic actions.
//!
//! A thread is either `stop` (successful termination), `dead` (inaction), or a
//! postconditional composition `p <a> q`: perform action `a`, continue with
//! `p` on reply `true` and with `q` on reply `false`. Action prefixing
//! `a . p` abbreviates `p <a> p`.
//!
//! Infinite threads are presented by finite linear recursive specifications:
//! every right hand side is `stop`, `dead`, or `Y <a> Z` with `Y`, `Z`
//! variables of the specification. A [`ThreadHandle`] is a root variable
//! paired with such a specification and denotes the unique solution at that
//! variable.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub mod text;

/// Name of a basic action, e.g. `load:0`, `store:3` or a machine-specific id.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(String);

impl ActionId {
    pub fn new(name: impl Into<String>) -> Self {
        ActionId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ActionId({})", self.0)
    }
}

impl From<&str> for ActionId {
    fn from(s: &str) -> Self {
        ActionId::new(s)
    }
}

impl From<String> for ActionId {
    fn from(s: String) -> Self {
        ActionId::new(s)
    }
}

/// One naming layer added to a variable by a thread transformation: a number
/// of primes followed by a binary subscript, as in `X'_0` or `X''_1`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Decoration {
    pub primes: u8,
    pub subscript: u8,
}

/// Structured variable name: a base identifier plus a stack of decorations.
///
/// Transformations that subscript and prime variables push a [`Decoration`]
/// instead of mangling the base string, so repeated transformation never
/// collides names.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId {
    base: String,
    decorations: Vec<Decoration>,
}

impl VarId {
    pub fn new(base: impl Into<String>) -> Self {
        VarId { base: base.into(), decorations: Vec::new() }
    }

    /// The variable with one more naming layer, e.g. `X''_1` from `X`.
    pub fn decorated(&self, primes: u8, subscript: u8) -> Self {
        let mut v = self.clone();
        v.decorations.push(Decoration { primes, subscript });
        v
    }

    /// True if `self` is `base` with exactly one more decoration, and that
    /// decoration has the given shape.
    pub fn is_decoration_of(&self, base: &VarId, primes: u8, subscript: u8) -> bool {
        self.base == base.base
            && self.decorations.len() == base.decorations.len() + 1
            && self.decorations[..base.decorations.len()] == base.decorations[..]
            && *self.decorations.last().unwrap() == Decoration { primes, subscript }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        for d in &self.decorations {
            for _ in 0..d.primes {
                f.write_str("'")?;
            }
            write!(f, "_{}", d.subscript)?;
        }
        Ok(())
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VarId({self})")
    }
}

impl From<&str> for VarId {
    fn from(s: &str) -> Self {
        VarId::new(s)
    }
}

impl From<String> for VarId {
    fn from(s: String) -> Self {
        VarId::new(s)
    }
}

/// Finite thread term. `Ref` only makes sense inside a specification context
/// and is rejected by [`linearize`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ThreadExpr {
    Stop,
    Dead,
    Post(Box<ThreadExpr>, ActionId, Box<ThreadExpr>),
    Ref(VarId),
}

impl ThreadExpr {
    pub fn post(yes: ThreadExpr, action: impl Into<ActionId>, no: ThreadExpr) -> Self {
        ThreadExpr::Post(Box::new(yes), action.into(), Box::new(no))
    }

    /// Action prefix `a . p`, i.e. `p <a> p`.
    pub fn prefix(action: impl Into<ActionId>, p: ThreadExpr) -> Self {
        ThreadExpr::Post(Box::new(p.clone()), action.into(), Box::new(p))
    }

    pub fn node_count(&self) -> usize {
        match self {
            ThreadExpr::Stop | ThreadExpr::Dead | ThreadExpr::Ref(_) => 1,
            ThreadExpr::Post(y, _, n) => 1 + y.node_count() + n.node_count(),
        }
    }

    fn is_closed(&self) -> bool {
        match self {
            ThreadExpr::Stop | ThreadExpr::Dead => true,
            ThreadExpr::Ref(_) => false,
            ThreadExpr::Post(y, _, n) => y.is_closed() && n.is_closed(),
        }
    }
}

/// Right hand side of one linear equation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum LinearRhs {
    Stop,
    Dead,
    Post { yes: VarId, action: ActionId, no: VarId },
}

impl LinearRhs {
    pub fn post(yes: impl Into<VarId>, action: impl Into<ActionId>, no: impl Into<VarId>) -> Self {
        LinearRhs::Post { yes: yes.into(), action: action.into(), no: no.into() }
    }
}

/// Ill-formed specification or handle.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum SpecError {
    #[error("specification has no equations")]
    Empty,
    #[error("variable {0} is referenced but has no equation")]
    Unbound(VarId),
    #[error("root variable {0} has no equation")]
    MissingRoot(VarId),
}

/// Finite linear recursive specification: one equation per variable, every
/// referenced variable bound.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LinearSpec {
    eqs: BTreeMap<VarId, LinearRhs>,
}

impl LinearSpec {
    pub fn new(eqs: BTreeMap<VarId, LinearRhs>) -> Result<Self, SpecError> {
        if eqs.is_empty() {
            return Err(SpecError::Empty);
        }
        for rhs in eqs.values() {
            if let LinearRhs::Post { yes, no, .. } = rhs {
                for v in [yes, no] {
                    if !eqs.contains_key(v) {
                        return Err(SpecError::Unbound(v.clone()));
                    }
                }
            }
        }
        Ok(LinearSpec { eqs })
    }

    pub fn len(&self) -> usize {
        self.eqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eqs.is_empty()
    }

    pub fn rhs(&self, v: &VarId) -> Option<&LinearRhs> {
        self.eqs.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &LinearRhs)> {
        self.eqs.iter()
    }

    /// Every action occurring in some equation.
    pub fn actions(&self) -> BTreeSet<ActionId> {
        self.eqs
            .values()
            .filter_map(|r| match r {
                LinearRhs::Post { action, .. } => Some(action.clone()),
                _ => None,
            })
            .collect()
    }
}

/// A thread: a root variable of a shared linear specification.
#[derive(Clone, Debug)]
pub struct ThreadHandle {
    root: VarId,
    spec: Arc<LinearSpec>,
}

impl ThreadHandle {
    pub fn new(root: VarId, spec: Arc<LinearSpec>) -> Result<Self, SpecError> {
        if spec.rhs(&root).is_none() {
            return Err(SpecError::MissingRoot(root));
        }
        Ok(ThreadHandle { root, spec })
    }

    /// Convenience constructor from an equation list; the first variable in
    /// `eqs` order is not privileged, the explicit `root` is.
    pub fn from_eqs(
        root: impl Into<VarId>,
        eqs: Vec<(VarId, LinearRhs)>,
    ) -> Result<Self, SpecError> {
        let spec = LinearSpec::new(eqs.into_iter().collect())?;
        ThreadHandle::new(root.into(), Arc::new(spec))
    }

    pub fn root(&self) -> &VarId {
        &self.root
    }

    pub fn spec(&self) -> &Arc<LinearSpec> {
        &self.spec
    }

    pub fn root_rhs(&self) -> &LinearRhs {
        self.spec.rhs(&self.root).expect("root is bound by construction")
    }

    /// Same specification, different root.
    pub fn at(&self, v: &VarId) -> Option<ThreadHandle> {
        self.spec.rhs(v)?;
        Some(ThreadHandle { root: v.clone(), spec: Arc::clone(&self.spec) })
    }
}

impl PartialEq for ThreadHandle {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && *self.spec == *other.spec
    }
}

impl Eq for ThreadHandle {}

impl PartialOrd for ThreadHandle {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ThreadHandle {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.root, &*self.spec).cmp(&(&other.root, &*other.spec))
    }
}

/// A residual of a thread. Terminated and deadlocked residuals are shared
/// constants so that residual counting never distinguishes two `stop` (or two
/// `dead`) equations.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Residual {
    Stop,
    Dead,
    At(ThreadHandle),
}

impl Residual {
    /// Normalizes a handle whose root equation is terminal.
    pub fn of(h: ThreadHandle) -> Residual {
        match h.root_rhs() {
            LinearRhs::Stop => Residual::Stop,
            LinearRhs::Dead => Residual::Dead,
            LinearRhs::Post { .. } => Residual::At(h),
        }
    }
}

/// Turns a closed finite term into a handle denoting the same thread.
///
/// Structurally identical subterms share one variable, so the resulting
/// specification has at most `term.node_count()` equations. Variables are
/// named `X0`, `X1`, … in first-visit order; `X0` is the root.
///
/// Panics if the term contains a `Ref` (it would not be closed).
pub fn linearize(term: &ThreadExpr) -> ThreadHandle {
    assert!(term.is_closed(), "linearize requires a closed term");
    let mut memo: HashMap<&ThreadExpr, VarId> = HashMap::new();
    let mut eqs: BTreeMap<VarId, LinearRhs> = BTreeMap::new();

    fn visit<'t>(
        t: &'t ThreadExpr,
        memo: &mut HashMap<&'t ThreadExpr, VarId>,
        eqs: &mut BTreeMap<VarId, LinearRhs>,
    ) -> VarId {
        if let Some(v) = memo.get(t) {
            return v.clone();
        }
        let v = VarId::new(format!("X{}", memo.len()));
        memo.insert(t, v.clone());
        let rhs = match t {
            ThreadExpr::Stop => LinearRhs::Stop,
            ThreadExpr::Dead => LinearRhs::Dead,
            ThreadExpr::Post(y, a, n) => {
                let yv = visit(y, memo, eqs);
                let nv = visit(n, memo, eqs);
                LinearRhs::Post { yes: yv, action: a.clone(), no: nv }
            }
            ThreadExpr::Ref(_) => unreachable!("closedness checked above"),
        };
        eqs.insert(v.clone(), rhs);
        v
    }

    let root = visit(term, &mut memo, &mut eqs);
    ThreadHandle { root, spec: Arc::new(LinearSpec { eqs }) }
}

/// Approximation `project(n, h)`: behave as `h` for up to `n` actions, then
/// become `dead`.
///
/// `project(0, _)` is `dead`; `stop` and `dead` project to themselves at
/// positive depth; a postconditional projects both branches one level
/// shallower.
pub fn project(n: usize, h: &ThreadHandle) -> ThreadExpr {
    fn go(n: usize, v: &VarId, spec: &LinearSpec) -> ThreadExpr {
        if n == 0 {
            return ThreadExpr::Dead;
        }
        match spec.rhs(v).expect("spec is closed") {
            LinearRhs::Stop => ThreadExpr::Stop,
            LinearRhs::Dead => ThreadExpr::Dead,
            LinearRhs::Post { yes, action, no } => ThreadExpr::Post(
                Box::new(go(n - 1, yes, spec)),
                action.clone(),
                Box::new(go(n - 1, no, spec)),
            ),
        }
    }
    go(n, &h.root, &h.spec)
}

/// [`project`] on finite closed terms.
pub fn project_expr(n: usize, t: &ThreadExpr) -> ThreadExpr {
    if n == 0 {
        return ThreadExpr::Dead;
    }
    match t {
        ThreadExpr::Stop => ThreadExpr::Stop,
        ThreadExpr::Dead => ThreadExpr::Dead,
        ThreadExpr::Post(y, a, z) => ThreadExpr::Post(
            Box::new(project_expr(n - 1, y)),
            a.clone(),
            Box::new(project_expr(n - 1, z)),
        ),
        ThreadExpr::Ref(_) => panic!("project_expr requires a closed term"),
    }
}

/// The residuals of `h`: everything reachable by following both branches of
/// every postconditional, `h` itself included. Cardinality is bounded by the
/// number of equations of the specification.
pub fn residuals(h: &ThreadHandle) -> BTreeSet<Residual> {
    let mut seen: BTreeSet<VarId> = BTreeSet::new();
    let mut stack = vec![h.root.clone()];
    let mut out = BTreeSet::new();
    while let Some(v) = stack.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        match h.spec.rhs(&v).expect("spec is closed") {
            LinearRhs::Stop => {
                out.insert(Residual::Stop);
            }
            LinearRhs::Dead => {
                out.insert(Residual::Dead);
            }
            LinearRhs::Post { yes, no, .. } => {
                out.insert(Residual::At(h.at(&v).expect("reachable var is bound")));
                stack.push(yes.clone());
                stack.push(no.clone());
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum NodeKind {
    Stop,
    Dead,
    Post(usize), // action index
}

/// Bisimulation equivalence of two threads.
///
/// Threads here are deterministic trees unfolded from finite graphs, so
/// bisimilarity coincides with equality of all finite projections; it is
/// decided by partition refinement on the disjoint union of the two residual
/// graphs.
pub fn bisimilar(h1: &ThreadHandle, h2: &ThreadHandle) -> bool {
    // Disjoint union of reachable variables; nodes 0 and 1 are the roots.
    let mut actions: BTreeMap<ActionId, usize> = BTreeMap::new();
    let mut kinds: Vec<NodeKind> = Vec::new();
    let mut succ: Vec<(usize, usize)> = Vec::new();

    let mut add_graph = |h: &ThreadHandle| -> usize {
        let base = kinds.len();
        let mut order: Vec<VarId> = Vec::new();
        let mut idx: BTreeMap<VarId, usize> = BTreeMap::new();
        let mut stack = vec![h.root.clone()];
        while let Some(v) = stack.pop() {
            if idx.contains_key(&v) {
                continue;
            }
            idx.insert(v.clone(), base + order.len());
            order.push(v.clone());
            if let LinearRhs::Post { yes, no, .. } = h.spec.rhs(&v).expect("closed") {
                stack.push(yes.clone());
                stack.push(no.clone());
            }
        }
        for v in &order {
            match h.spec.rhs(v).expect("closed") {
                LinearRhs::Stop => {
                    kinds.push(NodeKind::Stop);
                    succ.push((usize::MAX, usize::MAX));
                }
                LinearRhs::Dead => {
                    kinds.push(NodeKind::Dead);
                    succ.push((usize::MAX, usize::MAX));
                }
                LinearRhs::Post { yes, action, no } => {
                    let next = actions.len();
                    let a = *actions.entry(action.clone()).or_insert(next);
                    kinds.push(NodeKind::Post(a));
                    succ.push((idx[yes], idx[no]));
                }
            }
        }
        base
    };

    let r1 = add_graph(h1);
    let r2 = add_graph(h2);
    drop(add_graph);

    // Initial partition: by node kind (terminals apart, postconditionals by
    // action). Refine by successor blocks until stable.
    let n = kinds.len();
    let mut block: Vec<usize> = vec![0; n];
    {
        let mut by_kind: HashMap<NodeKind, usize> = HashMap::new();
        for i in 0..n {
            let next = by_kind.len();
            block[i] = *by_kind.entry(kinds[i]).or_insert(next);
        }
    }
    loop {
        let mut sig: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut next: Vec<usize> = vec![0; n];
        for i in 0..n {
            let s = match kinds[i] {
                NodeKind::Post(_) => (block[i], block[succ[i].0], block[succ[i].1]),
                _ => (block[i], usize::MAX, usize::MAX),
            };
            let fresh = sig.len();
            next[i] = *sig.entry(s).or_insert(fresh);
        }
        let stable = sig.len() == block.iter().collect::<BTreeSet<_>>().len();
        block = next;
        if stable {
            break;
        }
    }
    block[r1] == block[r2]
}

/// Bisimilarity between a handle and a closed finite term, checked by
/// structural recursion on the term. Independent of [`linearize`], which makes
/// it a useful oracle for it.
pub fn bisimilar_expr(h: &ThreadHandle, t: &ThreadExpr) -> bool {
    fn go(v: &VarId, spec: &LinearSpec, t: &ThreadExpr) -> bool {
        match (spec.rhs(v).expect("closed"), t) {
            (LinearRhs::Stop, ThreadExpr::Stop) => true,
            (LinearRhs::Dead, ThreadExpr::Dead) => true,
            (LinearRhs::Post { yes, action, no }, ThreadExpr::Post(y, a, z)) => {
                action == a && go(yes, spec, y) && go(no, spec, z)
            }
            _ => false,
        }
    }
    t.is_closed() && go(&h.root, &h.spec, t)
}
