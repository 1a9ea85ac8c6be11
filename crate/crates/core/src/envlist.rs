//! Persistent name-to-value environment shared by the interpreters.
//!
//! A linked list of bindings behind `Rc`: extending is O(1) and never
//! disturbs captured environments, which closures rely on.

use std::rc::Rc;

#[derive(Debug, Clone)]
pub struct EnvList<V>(Option<Rc<Node<V>>>);

#[derive(Debug)]
struct Node<V> {
    name: String,
    value: V,
    rest: EnvList<V>,
}

impl<V> Default for EnvList<V> {
    fn default() -> Self {
        EnvList(None)
    }
}

impl<V: Clone> EnvList<V> {
    pub fn empty() -> Self {
        EnvList(None)
    }

    pub fn extend(&self, name: impl Into<String>, value: V) -> Self {
        EnvList(Some(Rc::new(Node { name: name.into(), value, rest: self.clone() })))
    }

    pub fn extend_all<I>(&self, bindings: I) -> Self
    where
        I: IntoIterator<Item = (String, V)>,
    {
        let mut env = self.clone();
        for (name, value) in bindings {
            env = env.extend(name, value);
        }
        env
    }

    pub fn lookup(&self, name: &str) -> Option<&V> {
        let mut cur = self;
        while let Some(node) = &cur.0 {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.rest;
        }
        None
    }
}
