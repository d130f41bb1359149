// Sentence-level chrF++ values from sacrebleu 2.6.0, CHRF(word_order=2).
#[allow(dead_code)]
pub const REFERENCE: &[(&str, &str, f64)] = &[
    ("return x + 1;", "return x + 1;", 100.0),
    (
        "for i in range(10):\n    total += i",
        "for i in range(10):\n    total += i",
        100.0,
    ),
    (
        "if (a == null) { throw new Error(\"bad\"); }",
        "if (a == null) { throw new Error(\"bad\"); }",
        100.0,
    ),
    ("return x + 1;", "let mut v = Vec::new();", 6.59711334099857),
    (
        "for i in range(10):\n    total += i",
        "while (n > 0) { n--; }",
        7.187956585264037,
    ),
    (
        "if (a == null) { throw new Error(\"bad\"); }",
        "if (a == null) { throw new Error(\"bad\"); }",
        100.0,
    ),
    (
        "let mut v = Vec::new();",
        "self.cache[key] = value",
        7.772553757792252,
    ),
    (
        "def foo(a, b):\n    return a * b",
        "for i in range(10):\n    total += i",
        9.452602298056089,
    ),
    (
        "console.log('hello, world');",
        "fmt.Println(err)",
        4.807692307692308,
    ),
    (
        "x = [i for i in items if i]",
        "return x + 1;",
        7.319692516391589,
    ),
    (
        "public static void main(String[] args) {",
        "public static void main(String[] args) {",
        100.0,
    ),
    ("fmt.Println(err)", "(hi) there.", 13.115141776075856),
    (
        "self.cache[key] = value",
        "x = [i for i in items if i]",
        6.712354487420202,
    ),
    ("while (n > 0) { n--; }", "a", 0.0),
    (
        "import numpy as np",
        "console.log('hello, world');",
        2.562225072505928,
    ),
    ("}", "}", 100.0),
    ("a", "def foo(a, b):\n    return a * b", 9.72762645914397),
    ("(hi) there.", "import numpy as np", 2.6785714285714293),
    (
        "return + # y foo None",
        "return + # y foo None ->",
        86.35478449734725,
    ),
    ("y foo i i", "b) foo", 23.981900452488684),
    ("null;", "b) #", 0.0),
    ("null;", "null; bar", 55.74024404064826),
    (
        "None // self.value bar null;",
        "None // self.value bar null; y",
        94.56642315756007,
    ),
    (
        "len(arr) // None i",
        "items null; items == } b)",
        5.437413554633472,
    ),
    (
        "foo null; } ->",
        "= \n items } 'str' foo bar ->",
        14.732645109386427,
    ),
    (
        "return len(arr) i y // foo",
        "= count+=1 == 'str' len(arr) null;",
        22.635592401362796,
    ),
    (
        "foo {",
        "count+=1 // foo y \n count+=1 } #",
        7.66372218034023,
    ),
    (
        "} count+=1 + // == x items ==",
        "} count+=1 + // == x items ==   ",
        100.0,
    ),
    (
        "return \n b) + +",
        "foo self.value items + None { return i",
        14.46610757869246,
    ),
    (
        "count+=1 i == // +",
        "count+=1 i == // + b)",
        85.75254171798574,
    ),
    ("len(arr)", "len(arr) None", 62.289296457417166),
    (
        "'str' null; = return count+=1 ->",
        "items",
        5.319148936170214,
    ),
    (
        "+ + + bar len(arr) # +",
        "+ + + bar len(arr) # + (a,",
        84.14511749555437,
    ),
    (
        "self.value bar = 'str' y bar x null;",
        "None bar ==",
        25.247735565076017,
    ),
    ("(a, 'str'", "(a, 'str' len(arr)", 51.224633329192535),
    (
        "len(arr) len(arr) } foo return bar \n =",
        "len(arr) len(arr) } foo return bar \n = ->",
        91.94115257815542,
    ),
    (
        "return count+=1 None x    ->",
        "return count+=1 None x    -> self.value",
        74.21449375487873,
    ),
    (
        "   b) None None    ->",
        "# b) 'str'    (a, b)",
        7.707509497328309,
    ),
    ("(a, -> len(arr) == \n", "x {", 0.0),
    (
        "{ (a, count+=1 'str' == items \n == ==",
        "b) bar b)",
        2.2321428571428568,
    ),
    (
        "(a, = (a, len(arr) 'str' 'str' x len(arr) #",
        "# foo // bar + count+=1   ",
        5.573062558356676,
    ),
    ("len(arr) self.value i # =", "\n + items", 4.166666666666666),
    (
        "\n foo \n self.value self.value return x return",
        "# return 'str' 'str' len(arr) // == return None",
        18.76610902698769,
    ),
    ("x x \n #", "-> \n return", 0.0),
    (
        "(a, (a, x { (a, } -> b)",
        "{ None i return y \n ==",
        2.3797445691095724,
    ),
    (
        "// null; -> i -> return None return ->",
        "items   ",
        4.999999999999999,
    ),
    (
        "'str' x    return",
        "return len(arr) 'str' \n",
        39.42027191585921,
    ),
    (
        "None y =",
        "   bar None y b) (a, { y   ",
        21.101441366218506,
    ),
    ("-> items None", "   foo", 5.434782608695652),
    (
        "= 'str' -> 'str' -> (a, count+=1 { items",
        "-> b) count+=1 -> { None (a, items return",
        37.167739344076224,
    ),
];
