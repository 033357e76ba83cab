struct tree_node {
  int id;       // id of the node, critical
  struct tree_node *r; // pointer to the right child, critical
  struct tree_node *l; // pointer to the left child, critical
  double score; // score of this node, approximate
};

int size = 1000 * sizeof(struct tree_node);
struct tree_node *nodes = malloc(size);
