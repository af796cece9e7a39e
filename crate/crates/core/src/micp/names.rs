//! Column names used by the relaxation builders.

pub fn w(bus: &str) -> String {
    format!("W[{bus}]")
}
pub fn wr(branch: &str) -> String {
    format!("Wr[{branch}]")
}
pub fn wi(branch: &str) -> String {
    format!("Wi[{branch}]")
}
pub fn p_from(branch: &str) -> String {
    format!("P[{branch},fr]")
}
pub fn q_from(branch: &str) -> String {
    format!("Q[{branch},fr]")
}
pub fn p_to(branch: &str) -> String {
    format!("P[{branch},to]")
}
pub fn q_to(branch: &str) -> String {
    format!("Q[{branch},to]")
}
pub fn zv(bus: &str) -> String {
    format!("zv[{bus}]")
}
pub fn pg(gen: &str) -> String {
    format!("Pg[{gen}]")
}
pub fn qg(gen: &str) -> String {
    format!("Qg[{gen}]")
}
pub fn zg(gen: &str) -> String {
    format!("zg[{gen}]")
}
pub fn zd(load: &str) -> String {
    format!("zd[{load}]")
}
pub fn zs(shunt: &str) -> String {
    format!("zs[{shunt}]")
}
/// McCormick surrogate for `zs · W` of a shunt.
pub fn zs_w(shunt: &str) -> String {
    format!("zsW[{shunt}]")
}
pub fn p(junction: &str) -> String {
    format!("p[{junction}]")
}
pub fn pi(junction: &str) -> String {
    format!("pi[{junction}]")
}
pub fn s(receipt: &str) -> String {
    format!("s[{receipt}]")
}
pub fn d(delivery: &str) -> String {
    format!("d[{delivery}]")
}
pub fn f(arc: &str) -> String {
    format!("f[{arc}]")
}
pub fn y(arc: &str) -> String {
    format!("y[{arc}]")
}
pub fn l(arc: &str) -> String {
    format!("l[{arc}]")
}
pub fn z(arc: &str) -> String {
    format!("z[{arc}]")
}
