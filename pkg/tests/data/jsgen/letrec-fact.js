// Runtime for translated quotations.  Lists are tagged objects:
// {$: 0} is empty, {$: 1, $0: head, $1: tail} is a cons cell.
var RT = (function () {
  var RT = {};
  RT.$trunc = function (x) { return (x < 0 ? Math.ceil(x) : Math.floor(x)); };
  RT.$err = function (m) { throw new Error(m); };
  RT.$eq = function (a, b) {
    return (a !== null && typeof a === "object"
      ? (b !== null && typeof b === "object"
        ? (a.$ === 0
          ? b.$ === 0
          : (b.$ === 1 ? (RT.$eq(a.$0, b.$0) ? RT.$eq(a.$1, b.$1) : false) : false))
        : false)
      : a === b);
  };
  RT.add = function (a) { return function (b) { return a + b; }; };
  RT.sub = function (a) { return function (b) { return a - b; }; };
  RT.mul = function (a) { return function (b) { return a * b; }; };
  RT.div = function (a) { return function (b) { return (a % 1 === 0 && b % 1 === 0 ? RT.$trunc(a / b) : a / b); }; };
  RT.mod = function (a) { return function (b) { return a % b; }; };
  RT.neg = function (a) { return -a; };
  RT.lt = function (a) { return function (b) { return a < b; }; };
  RT.le = function (a) { return function (b) { return a <= b; }; };
  RT.gt = function (a) { return function (b) { return a > b; }; };
  RT.ge = function (a) { return function (b) { return a >= b; }; };
  RT.eq = function (a) { return function (b) { return RT.$eq(a, b); }; };
  RT.ne = function (a) { return function (b) { return !RT.$eq(a, b); }; };
  RT.and = function (a) { return function (b) { return a && b; }; };
  RT.or = function (a) { return function (b) { return a || b; }; };
  RT.not = function (a) { return !a; };
  RT.toFloat = function (a) { return a; };
  RT.toInt = function (a) { return RT.$trunc(a); };
  RT.sqrt = function (a) { return Math.sqrt(a); };
  RT.abs = function (a) { return Math.abs(a); };
  RT.min = function (a) { return function (b) { return Math.min(a, b); }; };
  RT.max = function (a) { return function (b) { return Math.max(a, b); }; };
  RT.cons = function (h) { return function (t) { return {$: 1, $0: h, $1: t}; }; };
  RT.head = function (l) { return (l.$ === 1 ? l.$0 : RT.$err("head of empty list")); };
  RT.tail = function (l) { return (l.$ === 1 ? l.$1 : RT.$err("tail of empty list")); };
  RT.isEmpty = function (l) { return l.$ === 0; };
  RT.length = function (l) { return (l.$ === 0 ? 0 : 1 + RT.length(l.$1)); };
  RT.append = function (a) { return function (b) { return (a.$ === 0 ? b : {$: 1, $0: a.$0, $1: RT.append(a.$1)(b)}); }; };
  RT.map = function (f) { return function (l) { return (l.$ === 0 ? {$: 0} : {$: 1, $0: f(l.$0), $1: RT.map(f)(l.$1)}); }; };
  RT.filter = function (p) { return function (l) { return (l.$ === 0 ? {$: 0} : (p(l.$0) ? {$: 1, $0: l.$0, $1: RT.filter(p)(l.$1)} : RT.filter(p)(l.$1))); }; };
  RT.foldl = function (f) { return function (z) { return function (l) { return (l.$ === 0 ? z : RT.foldl(f)(f(z)(l.$0))(l.$1)); }; }; };
  RT.sum = function (l) { return RT.foldl(RT.add)(0)(l); };
  RT.range = function (lo) { return function (hi) { return (lo > hi ? {$: 0} : {$: 1, $0: lo, $1: RT.range(lo + 1)(hi)}); }; };
  // Remote-call hook.  Arguments arrive as values in the tagged
  // encoding; a host page is expected to marshal them onto the wire
  // protocol's Eval message and resolve with the decoded Result.
  RT.rpc = function (name, args) { throw new Error("RT.rpc not wired: " + name); };
  return RT;
})();
var main = (function () { var fact = function (n) { return (RT.le(n)(1) ? 1 : RT.mul(n)(fact(RT.sub(n)(1)))); }; return fact(10); })();
