// Network simplex data types, after the mcf benchmark's defs.h.
typedef long flow_t;
typedef long cost_t;

typedef struct node node_t;
typedef struct node *node_p;
typedef struct arc arc_t;
typedef struct arc *arc_p;

struct node {
  cost_t potential;
  int orientation;
  node_p child;
  node_p pred;
  node_p sibling;
  node_p sibling_prev;
  arc_p basic_arc;
  arc_p firstout, firstin;
  arc_p arc_tmp;
  flow_t flow;
  long depth;
  int number;
  int time;
};

struct arc {
  cost_t cost;
  node_p tail, head;
  int ident;
  arc_p nextout, nextin;
  flow_t flow;
  cost_t org_cost;
};
